"""Traditional reserve-requirement model and recourse evaluation.

The traditional model procures energy and reserves against a system-wide
requirement proportional to total demand, with plain ramping limits on
energy that do not account for held reserve.

Any base dispatch, from either model, is scored by solving the per-period,
per-scenario re-dispatch problem with reserves fixed.  Only reserve that
can actually be ramped into the next period is deployable: for ``t < T``
the usable up-reserve is ``min(r_U,t, ramp_U - (g_t+1 - g_t))`` and the
usable down-reserve ``min(r_D,t, ramp_D - (g_t - g_t+1))``.  For a
co-optimized dispatch these caps never bind, so its score reproduces the
co-optimization objective; for the traditional dispatch they make the
scored schedule physically consistent with the ramp-reserve coupling.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .coopt import BaseDispatch, base_cost_by_period
from .errors import Infeasible, RecourseInfeasible
from .lp import LPBuilder, solve_lp
from .settlement import BASE

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ReserveRequirement:
    up: float  # fraction of total period demand
    down: float = 0.0

    def __post_init__(self):
        if self.up < 0 or self.down < 0:
            raise ValueError("reserve requirement fractions must be non-negative")

    def amounts(self, case):
        total = case.demand.sum(axis=1)
        return self.up * total, self.down * total


@dataclass(frozen=True, eq=False)
class TraditionalResult:
    requirement: ReserveRequirement
    dispatch: BaseDispatch
    base_cost: float
    raw: object  # lp.PrimalDualSolution


def solve_traditional(case, requirement):
    T, G = case.periods, len(case.generators)
    net, d = case.network, case.demand
    pmin, pmax = case.gen_array("p_min"), case.gen_array("p_max")
    capu, capd = case.gen_array("up_reserve_cap"), case.gen_array("down_reserve_cap")
    rampu, rampd = case.gen_array("ramp_up"), case.gen_array("ramp_down")
    q_up, q_down = requirement.amounts(case)
    init = case.initial_state
    periods = [f"t{t + 1}" for t in range(T)]
    b = LPBuilder("traditional")
    g = b.add_variables("g", periods, case.gen_ids, cost=np.tile(case.gen_array("energy_bid"), (T, 1)))
    ru = b.add_variables("ru", periods, case.gen_ids, cost=np.tile(case.gen_array("up_reserve_bid"), (T, 1)))
    rd = b.add_variables("rd", periods, case.gen_ids, cost=np.tile(case.gen_array("down_reserve_bid"), (T, 1)))
    for t, tl in enumerate(periods):
        b.add_eq(g[t], 1.0, d[t].sum(), f"balance({tl})")
        load_flow = net.load_sf @ d[t]
        for i, lid in enumerate(net.line_ids):
            b.add_le(g[t], net.gen_sf[i], net.limits[i] + load_flow[i], f"flow_max({tl},{lid})")
            b.add_le(g[t], -net.gen_sf[i], net.limits[i] - load_flow[i], f"flow_min({tl},{lid})")
        for j, gid in enumerate(case.gen_ids):
            tag = f"({tl},{gid})"
            b.add_le([g[t, j], rd[t, j]], [-1.0, 1.0], -pmin[j], "gen_min" + tag)
            b.add_le([g[t, j], ru[t, j]], [1.0, 1.0], pmax[j], "gen_max" + tag)
            b.add_le(ru[t, j], -1.0, 0.0, "ru_min" + tag)
            b.add_le(ru[t, j], 1.0, capu[j], "ru_max" + tag)
            b.add_le(rd[t, j], -1.0, 0.0, "rd_min" + tag)
            b.add_le(rd[t, j], 1.0, capd[j], "rd_max" + tag)
            if t > 0:
                b.add_le([g[t, j], g[t - 1, j]], [1.0, -1.0], rampu[j], "ramp_up" + tag)
                b.add_le([g[t, j], g[t - 1, j]], [-1.0, 1.0], rampd[j], "ramp_down" + tag)
            elif init is not None:
                # the initial state's held reserve is data, shared with the co-optimization
                b.add_le(g[t, j], 1.0, rampu[j] + init.g[j] - init.r_up[j], "ramp_up" + tag)
                b.add_le(g[t, j], -1.0, rampd[j] - init.g[j] - init.r_down[j], "ramp_down" + tag)
        b.add_le(ru[t], -1.0, -q_up[t], f"requirement_up({tl})")
        b.add_le(rd[t], -1.0, -q_down[t], f"requirement_down({tl})")
    raw = solve_lp(b.build())
    dispatch = BaseDispatch(raw.x[g], raw.x[ru], raw.x[rd])
    return TraditionalResult(requirement, dispatch, raw.objective, raw)


def deliverable_reserves(case, dispatch):
    """Reserve usable in each period given next-period ramping needs."""
    up, down = dispatch.r_up.copy(), dispatch.r_down.copy()
    if case.periods > 1:
        step = dispatch.g[1:] - dispatch.g[:-1]
        up[:-1] = np.minimum(up[:-1], np.maximum(0.0, case.gen_array("ramp_up") - step))
        down[:-1] = np.minimum(down[:-1], np.maximum(0.0, case.gen_array("ramp_down") + step))
    return up, down


@dataclass(frozen=True, eq=False)
class Recourse:
    cost: float
    dg_up: np.ndarray
    dg_down: np.ndarray
    shed: np.ndarray


def _recourse(case, g, r_up, r_down, k, t):
    G, L = len(case.generators), len(case.loads)
    net = case.network
    post = case.demand[t] + case.fluctuations[t, k]
    b = LPBuilder(f"recourse(t{t + 1},{case.scenarios.ids[k]})")
    gens, loads = case.gen_ids, case.load_ids
    dgu = b.add_variables("dgu", gens, cost=case.gen_array("redispatch_up_price"))
    dgd = b.add_variables("dgd", gens, cost=-case.gen_array("redispatch_down_price"))
    dd = b.add_variables("dd", loads, cost=case.load_array("shed_price"))
    cols = np.r_[dgu, dgd, dd]
    b.add_eq(cols, np.r_[np.ones(G), -np.ones(G), np.ones(L)], post.sum() - g.sum(), "scenario_balance")
    gsf, lsf = net.scen_gen_sf[k], net.scen_load_sf[k]
    base_flow = gsf @ g - lsf @ post
    for i in np.flatnonzero(net.in_service[k]):
        vals = np.r_[gsf[i], -gsf[i], lsf[i]]
        b.add_le(cols, vals, net.scen_limits[k, i] - base_flow[i], f"flow_max({i})")
        b.add_le(cols, -vals, net.scen_limits[k, i] + base_flow[i], f"flow_min({i})")
    for j in range(G):
        b.add_le(dgu[j], -1.0, 0.0, f"dgu_min({j})")
        b.add_le(dgu[j], 1.0, r_up[j], f"dgu_max({j})")
        b.add_le(dgd[j], -1.0, 0.0, f"dgd_min({j})")
        b.add_le(dgd[j], 1.0, r_down[j], f"dgd_max({j})")
    for l in range(L):
        b.add_le(dd[l], -1.0, 0.0, f"shed_min({l})")
        b.add_le(dd[l], 1.0, post[l], f"shed_max({l})")
    try:
        raw = solve_lp(b.build())
    except Infeasible as exc:
        raise RecourseInfeasible(str(exc)) from None
    return Recourse(raw.objective, raw.x[dgu], raw.x[dgd], raw.x[dd])


def recourse_evaluate(case, dispatch, scenario, period, deliverable=None):
    """Cheapest re-dispatch and shedding in ``scenario`` at ``period``.

    ``scenario`` is a scenario id, an index, or ``"base"`` (cost 0).
    """
    G, L = len(case.generators), len(case.loads)
    if scenario is None or scenario == BASE:
        return Recourse(0.0, np.zeros(G), np.zeros(G), np.zeros(L))
    k = case.scenarios.index(scenario) if isinstance(scenario, str) else int(scenario)
    up, down = deliverable if deliverable is not None else deliverable_reserves(case, dispatch)
    return _recourse(case, dispatch.g[period], up[period], down[period], k, period)


def recourse_table(case, dispatch, workers=1):
    """(T, K) recourse cost; ``nan`` where the fixed reserves cannot cope."""
    T, K = case.periods, len(case.scenarios)
    deliverable = deliverable_reserves(case, dispatch)
    cells = [(t, k) for t in range(T) for k in range(K)]

    def one(cell):
        t, k = cell
        try:
            return recourse_evaluate(case, dispatch, k, t, deliverable).cost
        except RecourseInfeasible:
            return np.nan

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            values = list(pool.map(one, cells))
    else:
        values = [one(c) for c in cells]
    return np.array(values, dtype=float).reshape(T, K)


@dataclass(frozen=True, eq=False)
class CostBreakdown:
    base_cost: np.ndarray  # (T,)
    recourse: np.ndarray  # (T, K)
    probabilities: np.ndarray

    @property
    def feasible(self):
        return not np.isnan(self.recourse).any()

    @property
    def expected_recourse(self):
        return self.recourse @ self.probabilities

    @property
    def total(self):
        return float(self.base_cost.sum() + self.expected_recourse.sum())


def cost_breakdown(case, dispatch, workers=1):
    return CostBreakdown(base_cost_by_period(case, dispatch), recourse_table(case, dispatch, workers),
                         case.probabilities)


def expected_total_cost(case, dispatch, workers=1):
    """Base cost plus expected recourse over all periods."""
    bd = cost_breakdown(case, dispatch, workers)
    if not bd.feasible:
        t, k = np.argwhere(np.isnan(bd.recourse))[0]
        raise RecourseInfeasible(f"period {t + 1}, scenario {case.scenarios.ids[k]}: reserves cannot cover the scenario")
    return bd.total
