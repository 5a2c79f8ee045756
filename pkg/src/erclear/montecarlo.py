"""Monte Carlo evaluation of realised system cost and operator net revenue.

Each sample draws one outcome per period independently (base case with
probability ``eps_0``, scenario ``k`` with ``eps_k``).  The random stream of
sample ``i`` is seeded from ``(seed, i)`` only, so results do not depend on
evaluation order or worker count, and every model sees the same
realisations (common random numbers).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .coopt import solve_model_vi
from .errors import Infeasible, RecourseInfeasible
from .scenarios import scenario_probabilities
from .settlement import settle
from .traditional import ReserveRequirement, cost_breakdown, solve_traditional


@dataclass(frozen=True)
class Realization:
    """Outcome per period: 0 is the base case, ``k`` is scenario ``k - 1``."""

    outcomes: tuple[int, ...]

    def labels(self, scenario_ids):
        return tuple("base" if o == 0 else scenario_ids[o - 1] for o in self.outcomes)


def _outcomes(seed, index, cumulative, periods):
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))
    draws = np.searchsorted(cumulative, rng.random(periods), side="right")
    return np.minimum(draws, len(cumulative) - 1)


def sample_realization(seed, index, scenario_set, periods):
    cumulative = np.cumsum(scenario_probabilities(scenario_set))
    return Realization(tuple(int(o) for o in _outcomes(seed, index, cumulative, periods)))


def sample_outcomes(seed, n_samples, scenario_set, periods):
    """(N, T) outcome matrix; row i equals ``sample_realization(seed, i)``."""
    cumulative = np.cumsum(scenario_probabilities(scenario_set))
    out = np.empty((n_samples, periods), dtype=int)
    for i in range(n_samples):
        out[i] = _outcomes(seed, i, cumulative, periods)
    return out


def _running_mean(values):
    return np.cumsum(values) / np.arange(1, len(values) + 1)


def _se(values):
    n = len(values)
    return float(np.std(values, ddof=1) / math.sqrt(n)) if n > 1 else float("nan")


@dataclass(frozen=True, eq=False)
class SimulationResult:
    n_samples: int
    seed: int
    costs: np.ndarray  # (N,) realised system cost per sample
    running_cost: np.ndarray
    expected_cost: float  # analytic expectation
    net_revenue: np.ndarray | None = None  # (N,) operator net revenue
    running_net_revenue: np.ndarray | None = None
    expected_net_revenue: float | None = None

    @property
    def mean_cost(self):
        return float(self.running_cost[-1])

    @property
    def se_cost(self):
        return _se(self.costs)

    @property
    def mean_net_revenue(self):
        return None if self.running_net_revenue is None else float(self.running_net_revenue[-1])

    @property
    def se_net_revenue(self):
        return None if self.net_revenue is None else _se(self.net_revenue)


def run_simulation(case, dispatch, n_samples, seed, solution=None, prices=None, workers=1,
                   outcomes=None, breakdown=None):
    """Sample realised costs of ``dispatch``.

    With ``solution`` and ``prices`` of the co-optimization the operator's
    realised net revenue (ex-ante surplus minus realised ex-post outflow) is
    tracked as well.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be positive")
    T = case.periods
    breakdown = breakdown or cost_breakdown(case, dispatch, workers)
    if not breakdown.feasible:
        raise RecourseInfeasible("dispatch cannot cover every scenario; realised costs undefined")
    if outcomes is None:
        outcomes = sample_outcomes(seed, n_samples, case.scenarios, T)
    table = np.hstack([np.zeros((T, 1)), breakdown.recourse])  # column 0 = base case
    rows = np.arange(T)
    costs = breakdown.base_cost.sum() + table[rows, outcomes].sum(axis=1)
    kwargs = {}
    if solution is not None and prices is not None:
        ledger = settle(solution, prices)
        outflow = np.hstack([np.zeros((T, 1)), ledger.scenario_net_outflow])
        revenue = ledger.ex_ante_surplus.sum() - outflow[rows, outcomes].sum(axis=1)
        kwargs = dict(net_revenue=revenue, running_net_revenue=_running_mean(revenue),
                      expected_net_revenue=float(ledger.expected_surplus.sum()))
    return SimulationResult(n_samples, seed, costs, _running_mean(costs), breakdown.total, **kwargs)


@dataclass(frozen=True)
class ComparisonRow:
    label: str
    kappa_up: float | None
    kappa_down: float | None
    status: str  # optimal | infeasible | recourse_infeasible
    base_cost: float | None = None
    expected_recourse: float | None = None
    expected_total: float | None = None
    mc_mean: float | None = None
    mc_se: float | None = None
    n_samples: int = 0
    gap_pct: float | None = None  # (row - co-optimized) / co-optimized
    reduction_pct: float | None = None  # (row - co-optimized) / row


def _row(label, kup, kdown, bd, sim):
    return ComparisonRow(label, kup, kdown, "optimal", float(bd.base_cost.sum()),
                         float(bd.expected_recourse.sum()), bd.total, sim.mean_cost, sim.se_cost, sim.n_samples)


def compare_models(case, kappas, n_samples, seed, down_ratio=0.0, workers=1, coopt=None):
    """Co-optimized row first, then one traditional row per requirement.

    ``kappas`` holds up-reserve fractions (down = ``down_ratio * up``) or
    :class:`ReserveRequirement` objects.  Rows that cannot be cleared or
    scored are kept with their status and no numbers.
    """
    coopt = coopt or solve_model_vi(case)
    outcomes = sample_outcomes(seed, n_samples, case.scenarios, case.periods)
    bd = cost_breakdown(case, coopt.dispatch, workers)
    sim = run_simulation(case, coopt.dispatch, n_samples, seed, outcomes=outcomes, breakdown=bd)
    ref = _row("co-optimized", None, None, bd, sim)
    rows = [ref]
    for kappa in kappas:
        req = kappa if isinstance(kappa, ReserveRequirement) else ReserveRequirement(kappa, down_ratio * kappa)
        label = f"traditional(up={req.up:g},down={req.down:g})"
        try:
            trad = solve_traditional(case, req)
        except Infeasible:
            rows.append(ComparisonRow(label, req.up, req.down, "infeasible"))
            continue
        tbd = cost_breakdown(case, trad.dispatch, workers)
        if not tbd.feasible:
            rows.append(ComparisonRow(label, req.up, req.down, "recourse_infeasible",
                                      base_cost=float(tbd.base_cost.sum())))
            continue
        tsim = run_simulation(case, trad.dispatch, n_samples, seed, outcomes=outcomes, breakdown=tbd)
        row = _row(label, req.up, req.down, tbd, tsim)
        gap = 100.0 * (row.expected_total - ref.expected_total)
        rows.append(replace(row, gap_pct=gap / ref.expected_total, reduction_pct=gap / row.expected_total))
    return rows
