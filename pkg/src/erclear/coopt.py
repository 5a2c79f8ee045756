"""Multi-period scenario-oriented energy-reserve co-optimization.

The model procures base-case energy ``g_t`` and up/down reserve
``r_U,t``/``r_D,t`` for every period, together with per-scenario
re-dispatch ``dgu``/``dgd`` and load shedding ``dd``, minimising bid-in
procurement cost plus probability-weighted re-dispatch and shedding cost.

Constraint families (row-name prefixes and dual names):

==================  ==========================================  ===========
family              row                                         dual
==================  ==========================================  ===========
balance             1'g_t = 1'd_t                               lambda_t
flow_max/flow_min   +-(S_m g_t - S_n d_t) <= f                  mu_t
gen_min/gen_max     G_min + r_D <= g,  g + r_U <= G_max          upsilon
ru_*/rd_*           0 <= r_U <= cap_U,  0 <= r_D <= cap_D        rho
ramp_up             g_t - g_{t-1} + r_U,t-1 <= ramp_U            gamma_U
ramp_down           -g_t + g_{t-1} + r_D,t-1 <= ramp_D           gamma_D
scenario_balance    1'(g+dgu-dgd) = 1'(d+pi-dd)                  lambda_k
scenario_flow_*     +-(S_k,m(g+dgu-dgd) - S_k,n(d+pi-dd)) <= f_k mu_k
dgu_min/dgu_max     0 <= dgu <= r_U                              alpha
dgd_min/dgd_max     0 <= dgd <= r_D                              beta
shed_min/shed_max   0 <= dd <= d + pi                            tau
==================  ==========================================  ===========

Flow limits are enforced in both directions; the net dual ``mu_max - mu_min``
is what enters the price formulas.  Ramping rows for the first period are
emitted only when the case carries an initial state.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import MissingInitialState, PeriodOutOfRange, UnknownGenerator
from .lp import LPBuilder, check_kkt, solve_lp

_PRIVATE = ("gen_min", "gen_max", "ru_min", "ru_max", "rd_min", "rd_max")


@dataclass(frozen=True, eq=False)
class ModelIndex:
    vars: dict  # name -> column index array
    eq: dict  # family -> row index array (-1 where absent)
    ub: dict
    fix: dict  # restricted model only: quantity -> eq row


@dataclass(frozen=True, eq=False)
class BaseDispatch:
    """First-stage schedule shared by both market models, arrays (T, G)."""

    g: np.ndarray
    r_up: np.ndarray
    r_down: np.ndarray


def base_cost_by_period(case, dispatch):
    cg, cu, cd = (case.gen_array(a) for a in ("energy_bid", "up_reserve_bid", "down_reserve_bid"))
    return dispatch.g @ cg + dispatch.r_up @ cu + dispatch.r_down @ cd


def _build(case, restrict=None, require_initial_ramp=False, name="model_vi"):
    T, G, L, K = case.periods, len(case.generators), len(case.loads), len(case.scenarios)
    net = case.network
    d, pi, eps = case.demand, case.fluctuations, case.probabilities
    cg, cu, cd = (case.gen_array(a) for a in ("energy_bid", "up_reserve_bid", "down_reserve_bid"))
    cup, cdn = case.gen_array("redispatch_up_price"), case.gen_array("redispatch_down_price")
    pmin, pmax = case.gen_array("p_min"), case.gen_array("p_max")
    capu, capd = case.gen_array("up_reserve_cap"), case.gen_array("down_reserve_cap")
    rampu, rampd = case.gen_array("ramp_up"), case.gen_array("ramp_down")
    cl = case.load_array("shed_price")
    init = case.initial_state
    if require_initial_ramp and init is None:
        raise MissingInitialState("first-period ramping requested but the case has no initial state")

    periods = [f"t{t + 1}" for t in range(T)]
    gens, loads, scen = case.gen_ids, case.load_ids, case.scenarios.ids
    lines = net.line_ids
    b = LPBuilder(name)
    g = b.add_variables("g", periods, gens, cost=np.tile(cg, (T, 1)))
    ru = b.add_variables("ru", periods, gens, cost=np.tile(cu, (T, 1)))
    rd = b.add_variables("rd", periods, gens, cost=np.tile(cd, (T, 1)))
    dgu = b.add_variables("dgu", periods, scen, gens, cost=np.broadcast_to(eps[None, :, None] * cup, (T, K, G)))
    dgd = b.add_variables("dgd", periods, scen, gens, cost=np.broadcast_to(-eps[None, :, None] * cdn, (T, K, G)))
    dd = b.add_variables("dd", periods, scen, loads, cost=np.broadcast_to(eps[None, :, None] * cl, (T, K, L)))

    def rows(*shape):
        return np.full(shape, -1, dtype=int)

    eq = {"balance": rows(T), "scenario_balance": rows(T, K)}
    ub = {f: rows(T, len(lines)) for f in ("flow_max", "flow_min")}
    ub.update({f: rows(T, G) for f in _PRIVATE + ("ramp_up", "ramp_down")})
    ub.update({f: rows(T, K, len(lines)) for f in ("scenario_flow_max", "scenario_flow_min")})
    ub.update({f: rows(T, K, G) for f in ("dgu_min", "dgu_max", "dgd_min", "dgd_max")})
    ub.update({f: rows(T, K, L) for f in ("shed_min", "shed_max")})

    for t, tl in enumerate(periods):
        eq["balance"][t] = b.add_eq(g[t], 1.0, d[t].sum(), f"balance({tl})")
        load_flow = net.load_sf @ d[t]
        for i, lid in enumerate(lines):
            ub["flow_max"][t, i] = b.add_le(g[t], net.gen_sf[i], net.limits[i] + load_flow[i], f"flow_max({tl},{lid})")
            ub["flow_min"][t, i] = b.add_le(g[t], -net.gen_sf[i], net.limits[i] - load_flow[i], f"flow_min({tl},{lid})")
        for j, gid in enumerate(gens):
            tag = f"({tl},{gid})"
            if restrict != (j, t):
                ub["gen_min"][t, j] = b.add_le([g[t, j], rd[t, j]], [-1.0, 1.0], -pmin[j], "gen_min" + tag)
                ub["gen_max"][t, j] = b.add_le([g[t, j], ru[t, j]], [1.0, 1.0], pmax[j], "gen_max" + tag)
                ub["ru_min"][t, j] = b.add_le(ru[t, j], -1.0, 0.0, "ru_min" + tag)
                ub["ru_max"][t, j] = b.add_le(ru[t, j], 1.0, capu[j], "ru_max" + tag)
                ub["rd_min"][t, j] = b.add_le(rd[t, j], -1.0, 0.0, "rd_min" + tag)
                ub["rd_max"][t, j] = b.add_le(rd[t, j], 1.0, capd[j], "rd_max" + tag)
            if t > 0:
                ub["ramp_up"][t, j] = b.add_le([g[t, j], g[t - 1, j], ru[t - 1, j]], [1.0, -1.0, 1.0], rampu[j], "ramp_up" + tag)
                ub["ramp_down"][t, j] = b.add_le([g[t, j], g[t - 1, j], rd[t - 1, j]], [-1.0, 1.0, 1.0], rampd[j], "ramp_down" + tag)
            elif init is not None:
                ub["ramp_up"][t, j] = b.add_le(g[t, j], 1.0, rampu[j] + init.g[j] - init.r_up[j], "ramp_up" + tag)
                ub["ramp_down"][t, j] = b.add_le(g[t, j], -1.0, rampd[j] - init.g[j] - init.r_down[j], "ramp_down" + tag)
        for k, sid in enumerate(scen):
            tk = f"{tl},{sid}"
            post = d[t] + pi[t, k]
            eq["scenario_balance"][t, k] = b.add_eq(
                np.r_[g[t], dgu[t, k], dgd[t, k], dd[t, k]],
                np.r_[np.ones(G), np.ones(G), -np.ones(G), np.ones(L)],
                post.sum(), f"scenario_balance({tk})")
            gsf, lsf = net.scen_gen_sf[k], net.scen_load_sf[k]
            load_flow = lsf @ post
            cols = np.r_[g[t], dgu[t, k], dgd[t, k], dd[t, k]]
            for i, lid in enumerate(lines):
                if not net.in_service[k, i]:
                    continue
                vals = np.r_[gsf[i], gsf[i], -gsf[i], lsf[i]]
                lim = net.scen_limits[k, i]
                ub["scenario_flow_max"][t, k, i] = b.add_le(cols, vals, lim + load_flow[i], f"scenario_flow_max({tk},{lid})")
                ub["scenario_flow_min"][t, k, i] = b.add_le(cols, -vals, lim - load_flow[i], f"scenario_flow_min({tk},{lid})")
            for j, gid in enumerate(gens):
                tag = f"({tk},{gid})"
                ub["dgu_min"][t, k, j] = b.add_le(dgu[t, k, j], -1.0, 0.0, "dgu_min" + tag)
                ub["dgu_max"][t, k, j] = b.add_le([dgu[t, k, j], ru[t, j]], [1.0, -1.0], 0.0, "dgu_max" + tag)
                ub["dgd_min"][t, k, j] = b.add_le(dgd[t, k, j], -1.0, 0.0, "dgd_min" + tag)
                ub["dgd_max"][t, k, j] = b.add_le([dgd[t, k, j], rd[t, j]], [1.0, -1.0], 0.0, "dgd_max" + tag)
            for l, lid in enumerate(loads):
                tag = f"({tk},{lid})"
                ub["shed_min"][t, k, l] = b.add_le(dd[t, k, l], -1.0, 0.0, "shed_min" + tag)
                ub["shed_max"][t, k, l] = b.add_le(dd[t, k, l], 1.0, post[l], "shed_max" + tag)

    fix = {}
    if restrict is not None:
        j, t = restrict
        for qty, var in (("g", g), ("r_up", ru), ("r_down", rd)):
            b.set_cost(var[t, j], 0.0)
            fix[qty] = b.add_eq(var[t, j], 1.0, 0.0, f"fix_{qty}({periods[t]},{gens[j]})")
    index = ModelIndex({"g": g, "ru": ru, "rd": rd, "dgu": dgu, "dgd": dgd, "dd": dd}, eq, ub, fix)
    return b.build(), index


def build_model_vi(case, require_initial_ramp=False):
    """The co-optimization LP and its ``(family, t, k, element) -> row`` map."""
    return _build(case, require_initial_ramp=require_initial_ramp)


def _gather(values, rows):
    out = np.zeros(rows.shape)
    mask = rows >= 0
    out[mask] = values[rows[mask]]
    return out


@dataclass(frozen=True, eq=False)
class CooptSolution:
    case: object
    lp: object
    index: ModelIndex
    raw: object  # lp.PrimalDualSolution

    @property
    def objective(self):
        return self.raw.objective

    def _x(self, name):
        return self.raw.x[self.index.vars[name]]

    @cached_property
    def g(self):
        return self._x("g")

    @cached_property
    def r_up(self):
        return self._x("ru")

    @cached_property
    def r_down(self):
        return self._x("rd")

    @cached_property
    def dg_up(self):
        return self._x("dgu")

    @cached_property
    def dg_down(self):
        return self._x("dgd")

    @cached_property
    def shed(self):
        return self._x("dd")

    @cached_property
    def duals(self):
        """Named multipliers, zero where a row does not exist.

        ``flow`` and ``scenario_flow`` are the net (max minus min) values.
        """
        out = {f: _gather(self.raw.eq_duals, r) for f, r in self.index.eq.items()}
        out.update({f: _gather(self.raw.ub_duals, r) for f, r in self.index.ub.items()})
        out["flow"] = out["flow_max"] - out["flow_min"]
        out["scenario_flow"] = out["scenario_flow_max"] - out["scenario_flow_min"]
        return out

    @property
    def dispatch(self):
        return BaseDispatch(self.g, self.r_up, self.r_down)

    def base_cost(self):
        """Bid-in procurement cost per period."""
        return base_cost_by_period(self.case, self.dispatch)

    def expected_redispatch_cost(self):
        """Probability-weighted re-dispatch plus shedding cost per period."""
        return self.scenario_cost() @ self.case.probabilities

    def scenario_cost(self):
        """(T, K) re-dispatch plus shedding cost if scenario k occurs."""
        c = self.case
        return (self.dg_up @ c.gen_array("redispatch_up_price")
                - self.dg_down @ c.gen_array("redispatch_down_price")
                + self.shed @ c.load_array("shed_price"))

    def kkt(self, tol=1e-6, gap_tol=1e-8):
        return check_kkt(self.lp, self.raw, tol, gap_tol)


def solve_model_vi(case, dual_selection="min-sum", require_initial_ramp=False):
    lp, index = build_model_vi(case, require_initial_ramp)
    return CooptSolution(case, lp, index, solve_lp(lp, dual_selection))


def solve_single_period(case, t, dual_selection="min-sum"):
    """Period ``t`` cleared on its own, without inter-temporal coupling."""
    return solve_model_vi(case.single_period(t), dual_selection)


@dataclass(frozen=True, eq=False)
class RestrictedModel:
    """Model VI with generator ``j``'s period-``t`` quantities as parameters.

    Its own capacity and reserve-offer rows at ``t`` are dropped and its
    period-``t`` bid cost is excluded from the objective.
    """

    lp: object
    index: ModelIndex
    generator: int
    period: int
    base_values: dict  # quantity -> optimal value in model VI

    def solve(self, dual_selection="solver", **values):
        b_eq = self.lp.b_eq.copy()
        for qty, row in self.index.fix.items():
            b_eq[row] = values.get(qty, self.base_values[qty])
        return solve_lp(self.lp.with_rhs(b_eq=b_eq), dual_selection)

    def evaluate(self, **values):
        """Optimal restricted cost at the given parameter values."""
        return self.solve(**values).objective


def build_model_vii_restricted(case, solution, generator, period):
    j = case.gen_index(generator) if isinstance(generator, str) else int(generator)
    if not 0 <= j < len(case.generators):
        raise UnknownGenerator(generator)
    if not 0 <= period < case.periods:
        raise PeriodOutOfRange(period)
    lp, index = _build(case, restrict=(j, period), name=f"model_vii({case.gen_ids[j]},t{period + 1})")
    base = {"g": solution.g[period, j], "r_up": solution.r_up[period, j], "r_down": solution.r_down[period, j]}
    return RestrictedModel(lp, index, j, period, base)
