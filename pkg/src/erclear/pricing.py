"""Marginal energy and reserve prices from the co-optimization duals.

Generator energy price, per period and generator ``j`` at bus ``m_j``::

    eta_g = (lambda_t - S(:,m_j)' mu_t) + sum_k (lambda_k,t - S_k(:,m_j)' mu_k,t)
          =  omega_g0                  + sum_k  omega_gk

Load energy price subtracts the shedding-bound multipliers,
``eta_d = omega_d0 + sum_k omega_dk - sum_k tau_max_k``, and reserve prices
are the sums of the reserve-coupling multipliers over scenarios.

The formulas carry no ramping terms.  When a generator's ramping rows bind
the price differs from the sensitivity of the restricted model, so the
envelope check is only meaningful where those rows are slack.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .coopt import build_model_vii_restricted
from .errors import LPError

RAMP_TOL = 1e-7
BOUND_TOL = 1e-7


@dataclass(frozen=True, eq=False)
class PriceSystem:
    energy_gen: np.ndarray  # (T, G)
    energy_gen_base: np.ndarray  # (T, G)
    energy_gen_scen: np.ndarray  # (T, K, G)
    energy_load: np.ndarray  # (T, L)
    energy_load_base: np.ndarray
    energy_load_scen: np.ndarray  # (T, K, L)
    shed_discount: np.ndarray  # (T, L), sum_k tau_max
    reserve_up: np.ndarray  # (T, G)
    reserve_down: np.ndarray


def _components(solution, gen_side):
    net, du = solution.case.network, solution.duals
    if gen_side:
        sf, scen_sf = net.gen_sf, net.scen_gen_sf
    else:
        sf, scen_sf = net.load_sf, net.scen_load_sf
    base = du["balance"][:, None] - du["flow"] @ sf
    scen = du["scenario_balance"][:, :, None] - np.einsum("tki,kie->tke", du["scenario_flow"], scen_sf)
    return base, scen


def energy_price_generators(solution):
    """``(eta_g, omega_g0, omega_gk)`` with shapes (T,G), (T,G), (T,K,G)."""
    base, scen = _components(solution, True)
    return base + scen.sum(axis=1), base, scen


def energy_price_loads(solution):
    """``(eta_d, omega_d0, omega_dk, sum_k tau_max)``."""
    base, scen = _components(solution, False)
    discount = solution.duals["shed_max"].sum(axis=1)
    return base + scen.sum(axis=1) - discount, base, scen, discount


def reserve_prices(solution):
    du = solution.duals
    return du["dgu_max"].sum(axis=1), du["dgd_max"].sum(axis=1)


def compute_prices(solution):
    eg, eg0, egk = energy_price_generators(solution)
    ed, ed0, edk, disc = energy_price_loads(solution)
    up, down = reserve_prices(solution)
    return PriceSystem(eg, eg0, egk, ed, ed0, edk, disc, up, down)


@dataclass(frozen=True)
class EnvelopeEntry:
    quantity: str  # "g", "r_up" or "r_down"
    analytic: float
    central: float | None
    left: float | None
    right: float | None
    status: str  # ok | boundary | kink | infeasible
    abs_error: float | None = None
    tolerance: float = 0.0
    passed: bool | None = None  # None when the point is not checkable
    at_bound: bool = False  # the generator's own bound or offer cap is active

    @property
    def smooth(self):
        return self.central is not None and self.status in ("ok", "boundary")


@dataclass(frozen=True)
class EnvelopeReport:
    generator: str
    period: int
    ramp_binding: bool
    entries: tuple[EnvelopeEntry, ...] = field(default_factory=tuple)

    @property
    def checkable(self):
        return not self.ramp_binding and all(e.smooth for e in self.entries)

    def entry(self, quantity):
        return next(e for e in self.entries if e.quantity == quantity)


def _at_boundary(case, solution, j, t):
    """Which perturbation directions leave generator j's own feasible set."""
    g, ru, rd = solution.g[t, j], solution.r_up[t, j], solution.r_down[t, j]
    gen = case.generators[j]

    def tight(a, b):
        return abs(a - b) <= BOUND_TOL * (1.0 + abs(b))

    head = tight(g + ru, gen.p_max)
    foot = tight(g - rd, gen.p_min)
    # (blocked when decreasing, blocked when increasing)
    return {
        "g": (foot, head),
        "r_up": (tight(ru, 0.0), head or tight(ru, gen.up_reserve_cap)),
        "r_down": (tight(rd, 0.0), foot or tight(rd, gen.down_reserve_cap)),
    }


def envelope_check(case, solution, generator, period, h=1e-3, prices=None, rel_tol=1e-4):
    """Compare analytic prices with finite differences of the restricted model.

    The derivative reported is ``-dF/dq`` for each fixed quantity ``q``.
    Quantities resting on the generator's own bounds are flagged
    ``boundary``; the restricted model no longer carries those bounds, so
    when both one-sided differences exist and agree the point is still
    compared.  Disagreeing one-sided differences mark a ``kink``, and a
    perturbation the restricted model cannot absorb marks the point
    ``infeasible`` (or ``boundary`` if it points out of the own bounds).
    Only smooth points with slack ramping rows get a pass/fail verdict.
    """
    prices = prices or compute_prices(solution)
    model = build_model_vii_restricted(case, solution, generator, period)
    j, t = model.generator, period
    du = solution.duals
    touching = [du["ramp_up"][t, j], du["ramp_down"][t, j]]
    if t + 1 < case.periods:
        touching += [du["ramp_up"][t + 1, j], du["ramp_down"][t + 1, j]]
    ramp_binding = bool(max(abs(v) for v in touching) > RAMP_TOL)
    analytic = {"g": float(prices.energy_gen[t, j]), "r_up": float(prices.reserve_up[t, j]),
                "r_down": float(prices.reserve_down[t, j])}
    blocked = _at_boundary(case, solution, j, t)

    def value(qty, delta):
        try:
            return model.evaluate(**{qty: model.base_values[qty] + delta})
        except LPError:
            return None

    entries = []
    f0 = value("g", 0.0)
    for qty in ("g", "r_up", "r_down"):
        price = analytic[qty]
        tol = rel_tol * (1.0 + abs(price))
        at_bound = any(blocked[qty])
        fp, fm = value(qty, h), value(qty, -h)
        left = None if fm is None or f0 is None else float(-(f0 - fm) / h)
        right = None if fp is None or f0 is None else float(-(fp - f0) / h)
        if left is None or right is None:
            one_sided = right if left is None else left
            err = None if one_sided is None else float(abs(one_sided - price))
            entries.append(EnvelopeEntry(qty, price, None, left, right, "boundary" if at_bound else "infeasible",
                                         err, tol, None, at_bound))
            continue
        central = float(-(fp - fm) / (2 * h))
        err = float(abs(central - price))
        if abs(left - right) > tol:
            entries.append(EnvelopeEntry(qty, price, central, left, right, "kink", err, tol, None, at_bound))
            continue
        entries.append(EnvelopeEntry(qty, price, central, left, right, "boundary" if at_bound else "ok", err, tol,
                                     None if ramp_binding else err <= tol, at_bound))
    return EnvelopeReport(case.gen_ids[j], t, ramp_binding, tuple(entries))
