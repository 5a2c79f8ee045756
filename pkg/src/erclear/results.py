"""CSV and manifest writers.

Numbers are written with 12 significant digits (money tables: 2 decimals) so
that identical inputs give byte-identical files; wall-clock timings only ever
go to the manifest.
"""

from __future__ import annotations

import csv
import json
import platform
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .settlement import BASE


def fmt(value, decimals=None):
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if decimals is not None:
            value = round(value, decimals)
        if value == 0.0:
            value = 0.0  # folds -0.0
        return format(value, f".{decimals}f") if decimals is not None else format(value, ".12g")
    return str(value)


def write_csv(path, header, rows, decimals=None):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v, decimals) for v in row])
    return path


def solution_rows(solution):
    case = solution.case
    yield ("objective", "", "", "", solution.objective)
    for name, arr in (("g", solution.g), ("r_up", solution.r_up), ("r_down", solution.r_down)):
        for t in range(case.periods):
            for j, gid in enumerate(case.gen_ids):
                yield (name, t + 1, BASE, gid, arr[t, j])
    for name, arr, ids in (("dg_up", solution.dg_up, case.gen_ids), ("dg_down", solution.dg_down, case.gen_ids),
                           ("shed", solution.shed, case.load_ids)):
        for t in range(case.periods):
            for k, sid in enumerate(case.scenarios.ids):
                for e, pid in enumerate(ids):
                    yield (name, t + 1, sid, pid, arr[t, k, e])


def write_solution(path, solution):
    return write_csv(path, ["variable", "period", "scenario", "participant", "value"], solution_rows(solution))


def write_prices(path, solution, prices):
    case = solution.case
    sids = case.scenarios.ids
    header = ["participant", "kind", "bus", "period", "energy_price", "omega_base",
              *(f"omega_{s}" for s in sids), "shed_discount", "reserve_up_price", "reserve_down_price"]
    rows = []
    for t in range(case.periods):
        for j, g in enumerate(case.generators):
            rows.append([g.id, "generator", g.bus, t + 1, prices.energy_gen[t, j], prices.energy_gen_base[t, j],
                         *prices.energy_gen_scen[t, :, j], None, prices.reserve_up[t, j], prices.reserve_down[t, j]])
        for l, ld in enumerate(case.loads):
            rows.append([ld.id, "load", ld.bus, t + 1, prices.energy_load[t, l], prices.energy_load_base[t, l],
                         *prices.energy_load_scen[t, :, l], prices.shed_discount[t, l], None, None])
    return write_csv(path, header, rows)


def write_envelope(path, reports):
    header = ["generator", "period", "ramp_binding", "quantity", "analytic", "central", "left", "right",
              "status", "at_bound", "abs_error", "tolerance", "passed"]
    rows = [[r.generator, r.period + 1, r.ramp_binding, e.quantity, e.analytic, e.central, e.left, e.right,
             e.status, e.at_bound, e.abs_error, e.tolerance, e.passed] for r in reports for e in r.entries]
    return write_csv(path, header, rows)


def write_ledger(path, ledger):
    """Expected cash flows per period (received amounts; payers negative)."""
    T = ledger.gen_energy.shape[0]
    rows = ([t + 1, party, item, amount] for t in range(T) for party, item, amount in ledger.cash_flows(t))
    return write_csv(path, ["period", "party", "item", "amount"], rows, decimals=2)


def write_profit(path, report):
    rows = []
    for j, gid in enumerate(report.gen_ids):
        rows += [[gid, t + 1, report.per_period[t, j]] for t in range(report.per_period.shape[0])]
        rows.append([gid, "total", report.total[j]])
    return write_csv(path, ["generator", "period", "profit"], rows, decimals=2)


def write_surplus(path, ledger, report):
    rows = [[t + 1, ledger.ex_ante_surplus[t], ledger.expected_ex_post_outflow[t], report.per_period[t],
             report.expected_cost[t]] for t in range(len(report.per_period))]
    rows.append(["total", ledger.ex_ante_surplus.sum(), ledger.expected_ex_post_outflow.sum(), report.total,
                 report.expected_cost.sum()])
    return write_csv(path, ["period", "ex_ante_surplus", "expected_ex_post_outflow", "expected_surplus",
                            "expected_cost"], rows, decimals=2)


def write_convergence(path, result):
    cols = [np.arange(1, result.n_samples + 1), result.costs, result.running_cost]
    header = ["sample", "cost", "running_mean_cost"]
    if result.net_revenue is not None:
        cols += [result.net_revenue, result.running_net_revenue]
        header += ["net_revenue", "running_mean_net_revenue"]
    return write_csv(path, header, zip(*cols))


def write_comparison(path, rows):
    header = list(asdict(rows[0]).keys()) if rows else []
    return write_csv(path, header, (list(asdict(r).values()) for r in rows))


def write_manifest(path, *, command, case_path, case_sha256, case_name, seed=None, samples=None,
                   options=None, timings=None, outputs=()):
    from . import __version__

    doc = {
        "tool": "erclear",
        "version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "command": command,
        "case": {"path": str(case_path), "name": case_name, "sha256": case_sha256},
        "seed": seed,
        "samples": samples,
        "options": options or {},
        "outputs": [Path(p).name for p in outputs],
        "timings_s": {k: round(v, 4) for k, v in (timings or {}).items()},
    }
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=False) + "\n")
    return Path(path)
