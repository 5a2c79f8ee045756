"""Thin linear-programming facade with a fixed dual sign convention.

Problems are ``min c.x`` subject to ``A_eq x = b_eq`` and ``A_ub x <= b_ub``
with free variables; every bound a caller wants priced is written as a
named inequality row.

Duals follow the Lagrangian::

    L = c.x + lam.(b_eq - A_eq x) + mu.(A_ub x - b_ub),   mu >= 0

so ``lam = d obj / d b_eq`` and ``mu = -d obj / d b_ub``.  Stationarity reads
``c - A_eq^T lam + A_ub^T mu = 0`` and the dual objective is
``lam.b_eq - mu.b_ub``.

The backend is HiGHS (dual simplex) through :func:`scipy.optimize.linprog`.
When the dual optimum is not unique, ``dual_selection="min-sum"`` re-solves
over the optimal dual face and returns the point minimising ``sum(mu)``;
this makes prices reproducible and independent of the simplex path.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from .errors import Infeasible, NumericalFailure, Unbounded

logger = logging.getLogger(__name__)

_HIGHS_OPTIONS = {
    "primal_feasibility_tolerance": 1e-9,
    "dual_feasibility_tolerance": 1e-9,
}


@dataclass(frozen=True, eq=False)
class LinearProgram:
    c: np.ndarray
    A_eq: sp.csr_matrix
    b_eq: np.ndarray
    A_ub: sp.csr_matrix
    b_ub: np.ndarray
    var_names: tuple[str, ...] = ()
    eq_names: tuple[str, ...] = ()
    ub_names: tuple[str, ...] = ()
    name: str = "lp"

    def __post_init__(self):
        n = len(self.c)
        if self.A_eq.shape != (len(self.b_eq), n) or self.A_ub.shape != (len(self.b_ub), n):
            raise ValueError("inconsistent LP dimensions")
        for arr in (self.c, self.b_eq, self.b_ub, self.A_eq.data, self.A_ub.data):
            if not np.all(np.isfinite(arr)):
                raise ValueError("non-finite LP coefficient")

    @property
    def n_vars(self):
        return len(self.c)

    def with_rhs(self, b_eq=None, b_ub=None):
        return LinearProgram(
            self.c, self.A_eq,
            self.b_eq if b_eq is None else np.asarray(b_eq, dtype=float),
            self.A_ub,
            self.b_ub if b_ub is None else np.asarray(b_ub, dtype=float),
            self.var_names, self.eq_names, self.ub_names, self.name,
        )


class LPBuilder:
    """Accumulates variables and rows, then freezes into a LinearProgram.

    Variable blocks come back as integer index arrays so callers can keep
    ``(t, k, j) -> column`` maps as plain numpy arrays.
    """

    def __init__(self, name="lp"):
        self.name = name
        self._names = []
        self._cost = []
        self._rows = {"eq": ([], [], [], [], []), "ub": ([], [], [], [], [])}

    @property
    def n_vars(self):
        return len(self._names)

    def add_variables(self, name, *axes, cost=0.0):
        shape = tuple(len(a) for a in axes)
        start = len(self._names)
        idx = np.arange(start, start + int(np.prod(shape, dtype=int))).reshape(shape)
        for combo in np.ndindex(*shape):
            label = ",".join(str(ax[i]) for ax, i in zip(axes, combo))
            self._names.append(f"{name}({label})")
        self._cost.extend(np.broadcast_to(np.asarray(cost, dtype=float), shape).ravel())
        return idx

    def add_cost(self, cols, values):
        for c, v in zip(np.ravel(cols), np.ravel(values)):
            self._cost[c] += float(v)

    def set_cost(self, cols, values):
        for c, v in zip(np.ravel(cols), np.broadcast_to(values, np.shape(cols)).ravel()):
            self._cost[c] = float(v)

    def _add(self, kind, cols, vals, rhs, name):
        rows, cs, vs, rhss, names = self._rows[kind]
        r = len(rhss)
        cols = np.atleast_1d(np.asarray(cols, dtype=int))
        vals = np.broadcast_to(np.asarray(vals, dtype=float), cols.shape)
        nz = vals != 0.0
        rows.extend([r] * int(nz.sum()))
        cs.extend(cols[nz].tolist())
        vs.extend(vals[nz].tolist())
        rhss.append(float(rhs))
        names.append(name)
        return r

    def add_eq(self, cols, vals, rhs, name):
        return self._add("eq", cols, vals, rhs, name)

    def add_le(self, cols, vals, rhs, name):
        return self._add("ub", cols, vals, rhs, name)

    def build(self):
        n = len(self._names)
        mats = {}
        for kind, (rows, cs, vs, rhss, _) in self._rows.items():
            m = sp.coo_matrix((vs, (rows, cs)), shape=(len(rhss), n)).tocsr()
            m.sum_duplicates()
            mats[kind] = (m, np.array(rhss, dtype=float))
        return LinearProgram(
            np.array(self._cost, dtype=float),
            mats["eq"][0], mats["eq"][1], mats["ub"][0], mats["ub"][1],
            tuple(self._names), tuple(self._rows["eq"][4]), tuple(self._rows["ub"][4]),
            self.name,
        )


@dataclass(frozen=True, eq=False)
class PrimalDualSolution:
    x: np.ndarray
    objective: float
    eq_duals: np.ndarray
    ub_duals: np.ndarray
    status: str = "optimal"
    message: str = ""
    dual_selection: str = "solver"

    def slack(self, problem):
        return problem.b_ub - problem.A_ub @ self.x


@dataclass(frozen=True)
class KKTReport:
    duality_gap: float
    relative_gap: float
    stationarity: float
    complementarity: float
    dual_feasibility: float
    primal_feasibility: float
    tol: float
    gap_tol: float
    passed: bool = field(default=False)

    def lines(self):
        return [
            f"duality gap        {self.duality_gap:.3e} (relative {self.relative_gap:.3e})",
            f"stationarity       {self.stationarity:.3e}",
            f"complementarity    {self.complementarity:.3e}",
            f"dual feasibility   {self.dual_feasibility:.3e}",
            f"primal feasibility {self.primal_feasibility:.3e}",
            f"KKT {'PASS' if self.passed else 'FAIL'} (tol {self.tol:g}, gap tol {self.gap_tol:g})",
        ]


def _raise_for_status(res, name):
    if res.status == 2:
        raise Infeasible(f"{name}: {res.message}")
    if res.status == 3:
        raise Unbounded(f"{name}: {res.message}")
    if res.status != 0:
        raise NumericalFailure(f"{name}: status {res.status}: {res.message}")


def _select_min_sum_duals(problem, x, active_tol):
    """Minimise sum(mu) over the optimal dual face at primal point ``x``."""
    slack = problem.b_ub - problem.A_ub @ x
    active = np.flatnonzero(slack <= active_tol * (1.0 + np.abs(problem.b_ub)))
    ne, na = problem.A_eq.shape[0], len(active)
    stationarity = sp.hstack([problem.A_eq.T, -problem.A_ub[active].T]).tocsr()
    cost = np.r_[np.zeros(ne), np.ones(na)]
    bounds = [(None, None)] * ne + [(0, None)] * na
    res = linprog(cost, A_eq=stationarity, b_eq=problem.c, bounds=bounds,
                  method="highs-ds", options=_HIGHS_OPTIONS)
    if res.status != 0:
        return None
    mu = np.zeros(problem.A_ub.shape[0])
    mu[active] = res.x[ne:]
    return res.x[:ne], mu


def solve_lp(problem, dual_selection="solver", active_tol=1e-7):
    """Solve to optimality; raise Infeasible / Unbounded / NumericalFailure.

    ``dual_selection`` is ``"solver"`` (basis duals as returned) or
    ``"min-sum"`` (see module docstring).
    """
    res = linprog(
        problem.c,
        A_ub=problem.A_ub if problem.A_ub.shape[0] else None,
        b_ub=problem.b_ub if problem.A_ub.shape[0] else None,
        A_eq=problem.A_eq if problem.A_eq.shape[0] else None,
        b_eq=problem.b_eq if problem.A_eq.shape[0] else None,
        bounds=(None, None),
        method="highs-ds",
        options=_HIGHS_OPTIONS,
    )
    _raise_for_status(res, problem.name)
    x = np.asarray(res.x, dtype=float)
    lam = np.asarray(res.eqlin.marginals, dtype=float) if problem.A_eq.shape[0] else np.zeros(0)
    mu = -np.asarray(res.ineqlin.marginals, dtype=float) if problem.A_ub.shape[0] else np.zeros(0)
    used = "solver"
    if dual_selection == "min-sum" and len(mu):
        picked = _select_min_sum_duals(problem, x, active_tol)
        if picked is None:
            logger.warning("%s: dual face re-solve failed, keeping solver duals", problem.name)
        else:
            lam, mu = picked
            used = "min-sum"
    elif dual_selection not in ("solver", "min-sum"):
        raise ValueError(f"unknown dual_selection {dual_selection!r}")
    return PrimalDualSolution(x, float(problem.c @ x), lam, mu, "optimal", res.message, used)


def check_kkt(problem, solution, tol=1e-6, gap_tol=1e-8):
    """Residuals of the optimality conditions, computed from raw data only."""
    x, lam, mu = solution.x, solution.eq_duals, solution.ub_duals
    primal = float(problem.c @ x)
    dual = float(lam @ problem.b_eq - mu @ problem.b_ub)
    gap = abs(primal - dual)
    rel = gap / (1.0 + abs(primal))
    grad = problem.c - problem.A_eq.T @ lam + problem.A_ub.T @ mu
    slack = problem.b_ub - problem.A_ub @ x
    eq_res = problem.A_eq @ x - problem.b_eq
    stat = float(np.max(np.abs(grad), initial=0.0))
    comp = float(np.max(np.abs(mu * slack), initial=0.0))
    dfeas = float(max(0.0, -np.min(mu, initial=0.0)))
    pfeas = float(max(np.max(np.abs(eq_res), initial=0.0), max(0.0, -np.min(slack, initial=0.0))))
    ok = rel <= gap_tol and stat <= tol and comp <= tol and dfeas <= tol and pfeas <= tol
    return KKTReport(gap, rel, stat, comp, dfeas, pfeas, tol, gap_tol, ok)


def _lp_name(name):
    return "".join(ch if ch.isalnum() or ch in "()_,.#" else "_" for ch in name)


def _lp_terms(row_cols, row_vals, names):
    parts = []
    for c, v in zip(row_cols, row_vals):
        sign = "-" if v < 0 else "+"
        parts.append(f"{sign} {abs(v):.17g} {names[c]}")
    text = " ".join(parts) if parts else "0 " + names[0]
    return text[2:] if text.startswith("+ ") else text


def write_lp_file(problem, path):
    """Dump ``problem`` in CPLEX LP text format (all variables free)."""
    names = [_lp_name(n) for n in problem.var_names] or [f"x{i}" for i in range(problem.n_vars)]
    out = [f"\\ {problem.name}", "Minimize"]
    nz = np.flatnonzero(problem.c)
    out.append(" obj: " + _lp_terms(nz, problem.c[nz], names))
    out.append("Subject To")
    for kind, mat, rhs, rnames, sense in (
        ("e", problem.A_eq, problem.b_eq, problem.eq_names, "="),
        ("u", problem.A_ub, problem.b_ub, problem.ub_names, "<="),
    ):
        for r in range(mat.shape[0]):
            lo, hi = mat.indptr[r], mat.indptr[r + 1]
            label = _lp_name(rnames[r]) if rnames else f"{kind}{r}"
            out.append(f" {label}: {_lp_terms(mat.indices[lo:hi], mat.data[lo:hi], names)} {sense} {rhs[r]:.17g}")
    out.append("Bounds")
    out.extend(f" {n} free" for n in names)
    out.append("End")
    with open(path, "w") as fh:
        fh.write("\n".join(out) + "\n")
