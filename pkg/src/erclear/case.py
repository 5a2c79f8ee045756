"""Market participants and the immutable market case."""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import cached_property

import numpy as np

from .errors import UnknownGenerator
from .network import apply_outages, compute_shift_factors, grid_issues
from .scenarios import DemandProfile, ScenarioSet, materialize_fluctuations, scenario_probabilities


@dataclass(frozen=True)
class Generator:
    id: str
    bus: str
    energy_bid: float  # c_g, $/MWh
    up_reserve_bid: float  # c_U, $/MW
    down_reserve_bid: float  # c_D, $/MW
    redispatch_up_price: float  # c-bar, $/MWh
    redispatch_down_price: float  # c-underbar, $/MWh
    p_min: float
    p_max: float
    up_reserve_cap: float
    down_reserve_cap: float
    ramp_up: float  # MW per period
    ramp_down: float


@dataclass(frozen=True)
class Load:
    id: str
    bus: str
    max_demand: float
    shed_price: float  # value of lost load, $/MWh


@dataclass(frozen=True)
class InitialState:
    """Operating point before the first period, one entry per generator."""

    g: tuple[float, ...]
    r_up: tuple[float, ...]
    r_down: tuple[float, ...]


@dataclass(frozen=True, eq=False)
class CaseNetwork:
    """Shift-factor selectors for the base topology and every scenario.

    Scenario arrays keep the base line order; rows of outaged lines are zero
    and flagged out of service so their flow rows are never emitted.
    """

    gen_sf: np.ndarray  # (lines, G)
    load_sf: np.ndarray  # (lines, L)
    limits: np.ndarray  # (lines,)
    line_ids: tuple[str, ...]
    scen_gen_sf: np.ndarray  # (K, lines, G)
    scen_load_sf: np.ndarray  # (K, lines, L)
    scen_limits: np.ndarray  # (K, lines)
    in_service: np.ndarray  # (K, lines) bool


@dataclass(frozen=True)
class MarketCase:
    name: str
    grid: object  # network.Grid
    generators: tuple[Generator, ...]
    loads: tuple[Load, ...]
    load_coefficients: tuple[float, ...]
    scenarios: ScenarioSet = ScenarioSet()
    initial_state: InitialState | None = None
    description: str = ""

    @property
    def periods(self):
        return len(self.load_coefficients)

    @property
    def gen_ids(self):
        return tuple(g.id for g in self.generators)

    @property
    def load_ids(self):
        return tuple(l.id for l in self.loads)

    @property
    def profile(self):
        return DemandProfile(self.load_ids, tuple(l.max_demand for l in self.loads), self.load_coefficients)

    @cached_property
    def demand(self):
        """(T, L) base demand in MW."""
        return self.profile.demand()

    @cached_property
    def fluctuations(self):
        """(T, K, L) materialised fluctuations in MW."""
        T, L = self.demand.shape
        out = np.zeros((T, len(self.scenarios), L))
        for k, s in enumerate(self.scenarios):
            out[:, k, :] = materialize_fluctuations(s, self.profile)
        return out

    @cached_property
    def probabilities(self):
        """Scenario probabilities without the base case, shape (K,)."""
        return scenario_probabilities(self.scenarios)[1:]

    def gen_array(self, attr):
        return np.array([getattr(g, attr) for g in self.generators], dtype=float)

    def load_array(self, attr):
        return np.array([getattr(l, attr) for l in self.loads], dtype=float)

    def gen_index(self, gen_id):
        for j, g in enumerate(self.generators):
            if g.id == gen_id:
                return j
        raise UnknownGenerator(gen_id)

    @cached_property
    def network(self):
        sf = compute_shift_factors(self.grid)
        gen_buses = [g.bus for g in self.generators]
        load_buses = [l.bus for l in self.loads]
        nl, K = len(self.grid.lines), len(self.scenarios)
        line_pos = {lid: i for i, lid in enumerate(self.grid.line_ids)}
        scen_g = np.zeros((K, nl, len(gen_buses)))
        scen_l = np.zeros((K, nl, len(load_buses)))
        scen_lim = np.zeros((K, nl))
        in_service = np.zeros((K, nl), dtype=bool)
        for k, s in enumerate(self.scenarios):
            reduced = apply_outages(self.grid, s.outages)
            sk = compute_shift_factors(reduced)
            rows = [line_pos[lid] for lid in reduced.line_ids]
            scen_g[k, rows] = sk.columns(gen_buses)
            scen_l[k, rows] = sk.columns(load_buses)
            scen_lim[k, rows] = [ln.limit_for(s.id) for ln in reduced.lines]
            in_service[k, rows] = True
        return CaseNetwork(
            sf.columns(gen_buses), sf.columns(load_buses),
            np.array([ln.limit for ln in self.grid.lines]), self.grid.line_ids,
            scen_g, scen_l, scen_lim, in_service,
        )

    def single_period(self, t):
        """The period-``t`` instance as a stand-alone one-period case."""
        return replace(self, name=f"{self.name}@t{t + 1}",
                       load_coefficients=(self.load_coefficients[t],), initial_state=None)


def case_warnings(case):
    """Advisory findings; ``--strict`` promotes them to errors."""
    out = []
    max_up = max((g.redispatch_up_price for g in case.generators), default=0.0)
    for g in case.generators:
        if not g.redispatch_down_price <= g.energy_bid <= g.redispatch_up_price:
            out.append(f"generator {g.id}: expected down price <= energy bid <= up price")
    for l in case.loads:
        if not l.shed_price > max_up:
            out.append(f"load {l.id}: shedding price {l.shed_price:g} not above max up price {max_up:g}")
    return out


def case_issues(case):
    """Semantic problems of an assembled case as ``(where, message)`` pairs."""
    out = [(i.where, f"{i.kind}: {i.message}") for i in grid_issues(case.grid)]
    buses = set(case.grid.buses)
    for kind, items in (("generator", case.generators), ("load", case.loads)):
        seen = set()
        for it in items:
            if it.id in seen:
                out.append((f"{kind} {it.id}", "DuplicateId"))
            seen.add(it.id)
            if it.bus not in buses:
                out.append((f"{kind} {it.id}", f"unknown bus {it.bus}"))
    for g in case.generators:
        if g.p_min > g.p_max:
            out.append((f"generator {g.id}", "p_min exceeds p_max"))
        for attr in ("up_reserve_cap", "down_reserve_cap", "ramp_up", "ramp_down"):
            if getattr(g, attr) < 0:
                out.append((f"generator {g.id}", f"{attr} is negative"))
    if case.periods < 1:
        out.append(("load_coefficients", "at least one period required"))
    if any(c <= 0 for c in case.load_coefficients):
        out.append(("load_coefficients", "coefficients must be positive"))
    if case.initial_state is not None:
        n = len(case.generators)
        st = case.initial_state
        if not len(st.g) == len(st.r_up) == len(st.r_down) == n:
            out.append(("initial_state", "one entry per generator required"))
    return out
