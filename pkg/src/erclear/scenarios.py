"""Demand profiles and the non-base scenario set."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NegativePostFluctuationDemand, ScenarioError, UnknownScenario


@dataclass(frozen=True)
class DemandProfile:
    load_ids: tuple[str, ...]
    max_demand: tuple[float, ...]  # MW per load
    coefficients: tuple[float, ...]  # one per period

    @property
    def periods(self):
        return len(self.coefficients)

    def demand(self):
        """Base demand ``d_t`` as a (T, loads) array."""
        return np.outer(self.coefficients, self.max_demand)


@dataclass(frozen=True)
class PercentRule:
    """Per-load percentage change of the period's base demand.

    ``changes`` maps load ids to signed percentages; every other load moves
    by ``default`` percent. ``PercentRule((("d119", 3.0),), default=-3.0)``
    is "d119 up by 3%, others down by 3%".
    """

    changes: tuple[tuple[str, float], ...] = ()
    default: float = 0.0


@dataclass(frozen=True)
class ExplicitFluctuation:
    values: tuple[tuple[float, ...], ...]  # MW, [period][load]


@dataclass(frozen=True)
class NonBaseScenario:
    id: str
    probability: float
    outages: tuple[str, ...] = ()
    fluctuation: PercentRule | ExplicitFluctuation = PercentRule()


@dataclass(frozen=True)
class ScenarioSet:
    scenarios: tuple[NonBaseScenario, ...] = ()

    def __len__(self):
        return len(self.scenarios)

    def __iter__(self):
        return iter(self.scenarios)

    @property
    def ids(self):
        return tuple(s.id for s in self.scenarios)

    @property
    def base_probability(self):
        return scenario_probabilities(self)[0]

    def index(self, scenario_id):
        try:
            return self.ids.index(scenario_id)
        except ValueError:
            raise UnknownScenario(scenario_id) from None


def scenario_probabilities(scenario_set):
    """``(eps_0, eps_1, ..., eps_K)`` with the base case first.

    ``eps_0`` is the residual ``1 - sum(eps_k)``; the sum is accurate to
    rounding because ``fsum`` is used for the residual.
    """
    eps = [s.probability for s in scenario_set]
    return np.array([1.0 - math.fsum(eps)] + eps)


def materialize_fluctuations(scenario, profile):
    """Explicit ``pi_{k,t}`` (MW) for one scenario, shape (T, loads)."""
    demand = profile.demand()
    rule = scenario.fluctuation
    if isinstance(rule, ExplicitFluctuation):
        pi = np.array(rule.values, dtype=float) if rule.values else np.zeros_like(demand)
        if pi.shape != demand.shape:
            raise ScenarioError(f"scenario {scenario.id}: fluctuation shape {pi.shape} != {demand.shape}")
    else:
        pct = np.full(len(profile.load_ids), float(rule.default))
        pos = {lid: i for i, lid in enumerate(profile.load_ids)}
        for lid, value in rule.changes:
            if lid not in pos:
                raise ScenarioError(f"scenario {scenario.id}: unknown load {lid!r}")
            pct[pos[lid]] = value
        pi = demand * (pct / 100.0)
    bad = np.argwhere(demand + pi < -1e-12)
    if bad.size:
        t, l = bad[0]
        raise NegativePostFluctuationDemand(
            f"scenario {scenario.id}: load {profile.load_ids[l]} period {t + 1} "
            f"demand {demand[t, l]:g} + fluctuation {pi[t, l]:g} < 0"
        )
    return pi


def scenario_set_issues(scenario_set):
    """Probability and id checks; topology checks live with the case."""
    problems = []
    seen = set()
    for s in scenario_set:
        if s.id in seen:
            problems.append(f"duplicate scenario id {s.id!r}")
        seen.add(s.id)
        if not 0.0 < s.probability < 1.0:
            problems.append(f"scenario {s.id}: probability {s.probability} outside (0, 1)")
    total = math.fsum(s.probability for s in scenario_set)
    if len(scenario_set) and not total < 1.0:
        problems.append(f"scenario probabilities sum to {total:g}, must be < 1")
    return problems
