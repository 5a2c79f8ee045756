"""DC network topology, shift factors and contingency topologies.

Shift factors are always computed exactly from the (possibly reduced)
topology; line outage distribution factors are deliberately not used.

Prices built on these matrices depend on the slack choice only through the
split between the energy-balance dual and the congestion term; their sum is
slack independent.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .errors import GridError, IslandingOutage, Issue, SingularNetworkMatrix, UnknownLine

_COND_LIMIT = 1e12


def _natural_key(label):
    return [int(p) if p.isdigit() else p for p in re.split(r"(\d+)", str(label))]


@dataclass(frozen=True)
class Line:
    id: str
    from_bus: str
    to_bus: str
    reactance: float  # p.u.
    limit: float  # MW, base case
    scenario_limits: tuple[tuple[str, float], ...] = ()  # (scenario id, MW)

    def limit_for(self, scenario_id=None):
        """Flow limit in a scenario; falls back to the base limit."""
        if scenario_id is not None:
            for sid, value in self.scenario_limits:
                if sid == scenario_id:
                    return value
        return self.limit


@dataclass(frozen=True)
class Grid:
    buses: tuple[str, ...]
    lines: tuple[Line, ...]
    slack: str | None = None

    @property
    def slack_bus(self):
        if self.slack is not None:
            return self.slack
        return min(self.buses, key=_natural_key)

    @property
    def line_ids(self):
        return tuple(ln.id for ln in self.lines)

    def bus_index(self):
        return {b: i for i, b in enumerate(self.buses)}

    def line(self, line_id):
        for ln in self.lines:
            if ln.id == line_id:
                return ln
        raise UnknownLine(line_id)


@dataclass(frozen=True, eq=False)
class ShiftFactorMatrix:
    """Rows are lines, columns are buses; injection at a bus withdrawn at slack."""

    matrix: np.ndarray
    bus_ids: tuple[str, ...]
    line_ids: tuple[str, ...]
    slack: str
    _bus_pos: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self._bus_pos.update({b: i for i, b in enumerate(self.bus_ids)})

    def columns(self, buses):
        """Selector ``S(:, m)`` for a sequence of bus ids (one column each)."""
        return self.matrix[:, [self._bus_pos[b] for b in buses]]

    def flows(self, injections):
        return self.matrix @ np.asarray(injections, dtype=float)


def _components(buses, lines):
    pos = {b: i for i, b in enumerate(buses)}
    n = len(buses)
    rows = [pos[ln.from_bus] for ln in lines]
    cols = [pos[ln.to_bus] for ln in lines]
    adj = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    return connected_components(adj, directed=False)


def grid_issues(grid):
    """All structural problems of ``grid`` (empty list when valid)."""
    issues = []
    seen = set()
    for b in grid.buses:
        if b in seen:
            issues.append(Issue("DuplicateId", f"bus {b}", "bus id repeated"))
        seen.add(b)
    seen_lines = set()
    for ln in grid.lines:
        where = f"line {ln.id}"
        if ln.id in seen_lines:
            issues.append(Issue("DuplicateId", where, "line id repeated"))
        seen_lines.add(ln.id)
        for end in (ln.from_bus, ln.to_bus):
            if end not in seen:
                issues.append(Issue("UnknownBus", where, f"references missing bus {end}"))
        if ln.from_bus == ln.to_bus:
            issues.append(Issue("SelfLoop", where, "from and to bus coincide"))
        if not ln.reactance > 0:
            issues.append(Issue("NonPositiveReactance", where, f"reactance {ln.reactance}"))
        if not ln.limit > 0:
            issues.append(Issue("NonPositiveLimit", where, f"limit {ln.limit}"))
        for sid, value in ln.scenario_limits:
            if not value > 0:
                issues.append(Issue("NonPositiveLimit", f"{where} scenario {sid}", f"limit {value}"))
    if not grid.buses:
        issues.append(Issue("EmptyGrid", "buses", "no buses"))
        return issues
    if grid.slack is not None and grid.slack not in seen:
        issues.append(Issue("UnknownBus", "slack", f"slack bus {grid.slack} missing"))
    if any(i.kind in ("UnknownBus", "DuplicateId") for i in issues):
        return issues
    _, labels = _components(grid.buses, grid.lines)
    ref = labels[grid.buses.index(grid.slack_bus)]
    for b, lab in zip(grid.buses, labels):
        if lab != ref:
            issues.append(Issue("Disconnected", f"bus {b}", "not reachable from the slack bus"))
    return issues


def validate_grid(grid):
    """Return ``grid`` unchanged when valid, else raise :class:`GridError`."""
    issues = grid_issues(grid)
    if issues:
        raise GridError(issues)
    return grid


def compute_shift_factors(grid):
    pos = grid.bus_index()
    nb, nl = len(grid.buses), len(grid.lines)
    incidence = np.zeros((nl, nb))
    for i, ln in enumerate(grid.lines):
        incidence[i, pos[ln.from_bus]] = 1.0
        incidence[i, pos[ln.to_bus]] = -1.0
    b = np.array([1.0 / ln.reactance for ln in grid.lines])
    keep = np.ones(nb, dtype=bool)
    keep[pos[grid.slack_bus]] = False
    branch = b[:, None] * incidence[:, keep]
    bred = incidence[:, keep].T @ branch
    if nb > 1 and np.linalg.cond(bred) > _COND_LIMIT:
        raise SingularNetworkMatrix(f"reduced susceptance matrix is singular (cond > {_COND_LIMIT:g})")
    matrix = np.zeros((nl, nb))
    if nb > 1:
        matrix[:, keep] = np.linalg.solve(bred.T, branch.T).T
        matrix[np.abs(matrix) < 1e-13] = 0.0
    return ShiftFactorMatrix(matrix, grid.buses, grid.line_ids, grid.slack_bus)


def apply_outages(grid, outage_ids):
    """Grid with the listed lines removed; the result must stay connected."""
    known = set(grid.line_ids)
    for lid in outage_ids:
        if lid not in known:
            raise UnknownLine(lid)
    drop = set(outage_ids)
    reduced = replace(grid, lines=tuple(ln for ln in grid.lines if ln.id not in drop))
    islands = [i for i in grid_issues(reduced) if i.kind == "Disconnected"]
    if islands:
        cut = ", ".join(sorted(drop))
        raise IslandingOutage(f"outage of {cut} isolates " + ", ".join(i.where for i in islands))
    return reduced
