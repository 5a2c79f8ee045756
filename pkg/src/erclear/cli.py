"""Command-line entry point: ``erclear <command> --case FILE [options]``.

Exit codes: 0 success, 1 infeasible or unbounded LP, 2 input error,
3 internal error.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import results
from .casefile import file_sha256, load_case, load_initial_state
from .case import case_warnings
from .cases import NAMES as BUNDLED, case_path
from .coopt import solve_model_vi
from .errors import ErclearError, Infeasible, IssuesError, NumericalFailure, Unbounded
from .montecarlo import compare_models, run_simulation
from .pricing import compute_prices, envelope_check
from .settlement import expected_merchandise_surplus, generator_profit_report, settle

logger = logging.getLogger("erclear")

EXIT_OK, EXIT_INFEASIBLE, EXIT_INPUT, EXIT_INTERNAL = 0, 1, 2, 3


class InputError(Exception):
    """Bad command-line value (exit code 2)."""


def parse_kappa_grid(text):
    """``a:b:step`` inclusive of ``b`` (or a comma list) -> list of floats."""
    try:
        if ":" not in text:
            values = [float(v) for v in text.split(",") if v.strip()]
        else:
            a, b, step = (float(v) for v in text.split(":"))
            if step <= 0 or b < a:
                raise ValueError
            n = int(np.floor((b - a) / step + 1e-9))
            values = [round(a + i * step, 12) for i in range(n + 1)]
    except ValueError:
        raise InputError(f"bad --kappa-grid {text!r}; expected a:b:step with step > 0 and b >= a") from None
    if not values or min(values) < 0:
        raise InputError("--kappa-grid values must be non-negative")
    return values


def parse_pairs(text, case):
    """Envelope pairs: ``all``, ``none``, ``auto`` or ``G1:3,G2:5`` (1-based periods)."""
    if text == "none":
        return []
    if text == "all" or (text == "auto" and len(case.generators) * case.periods <= 24):
        return [(j, t) for t in range(case.periods) for j in range(len(case.generators))]
    if text == "auto":
        peak = int(np.argmax(case.demand.sum(axis=1)))
        return [(j, peak) for j in range(len(case.generators))]
    pairs = []
    for item in text.split(","):
        gid, _, period = item.partition(":")
        if gid not in case.gen_ids or not period.isdigit() or not 1 <= int(period) <= case.periods:
            raise InputError(f"bad envelope pair {item!r}")
        pairs.append((case.gen_index(gid), int(period) - 1))
    return pairs


def resolve_case_path(text):
    path = Path(text)
    if not path.exists() and text in BUNDLED:
        return case_path(text)
    return path


def _load(args):
    path = resolve_case_path(args.case)
    if not Path(path).is_file():
        raise InputError(f"case file not found: {args.case}")
    case = load_case(path, strict=args.strict)
    if args.initial_state:
        case = replace(case, initial_state=load_initial_state(args.initial_state, case))
    return path, case


class Run:
    """Timings and outputs for the manifest."""

    def __init__(self, args, path, case):
        self.args, self.path, self.case = args, path, case
        self.out = Path(args.out_dir)
        self.out.mkdir(parents=True, exist_ok=True)
        self.timings, self.outputs = {}, []

    def timed(self, label, fn, *a, **kw):
        t0 = time.perf_counter()
        value = fn(*a, **kw)
        self.timings[label] = time.perf_counter() - t0
        return value

    def file(self, name):
        p = self.out / name
        self.outputs.append(p)
        return p

    def manifest(self, **extra):
        skip = ("func", "command", "verbose", "case", "out_dir", "seed", "samples")
        opts = {k: v for k, v in vars(self.args).items() if k not in skip}
        results.write_manifest(
            self.out / f"manifest-{self.args.command}.json", command=self.args.command, case_path=self.path,
            case_sha256=file_sha256(self.path), case_name=self.case.name,
            seed=getattr(self.args, "seed", None), samples=getattr(self.args, "samples", None),
            options={**opts, **extra}, timings=self.timings, outputs=self.outputs,
        )


def _solve(run):
    return run.timed("solve", solve_model_vi, run.case, require_initial_ramp=run.args.require_initial_ramp)


def cmd_solve(args):
    path, case = _load(args)
    run = Run(args, path, case)
    sol = _solve(run)
    results.write_solution(run.file("solution.csv"), sol)
    report = sol.kkt()
    run.file("kkt.txt").write_text("\n".join(report.lines()) + "\n")
    run.manifest()
    print(f"{case.name}: objective {sol.objective:.6f}")
    print("\n".join(report.lines()))
    return EXIT_OK if report.passed else EXIT_INTERNAL


def cmd_price(args):
    path, case = _load(args)
    run = Run(args, path, case)
    sol = _solve(run)
    prices = compute_prices(sol)
    results.write_prices(run.file("prices.csv"), sol, prices)
    pairs = parse_pairs(args.envelope_pairs, case)
    reports = run.timed("envelope", lambda: [envelope_check(case, sol, j, t, prices=prices) for j, t in pairs])
    results.write_envelope(run.file("envelope.csv"), reports)
    run.manifest()
    checked = [e for r in reports for e in r.entries if e.passed is not None]
    failed = [e for e in checked if not e.passed]
    print(f"{case.name}: prices for {len(case.generators)} generators, {len(case.loads)} loads, {case.periods} periods")
    print(f"envelope check: {len(pairs)} pairs, {len(checked)} checkable quantities, {len(failed)} mismatches")
    return EXIT_OK


def cmd_settle(args):
    path, case = _load(args)
    run = Run(args, path, case)
    sol = _solve(run)
    prices = compute_prices(sol)
    ledger = settle(sol, prices)
    surplus = expected_merchandise_surplus(sol, prices)
    profit = generator_profit_report(sol, prices, ledger)
    results.write_ledger(run.file("ledger.csv"), ledger)
    results.write_profit(run.file("profit.csv"), profit)
    results.write_surplus(run.file("surplus.csv"), ledger, surplus)
    run.manifest()
    worst = float(surplus.per_period.min())
    print(f"{case.name}: expected merchandise surplus total {surplus.total:.6f}, worst period {worst:.3e}, "
          f"revenue adequate: {'yes' if surplus.adequate() else 'no'}")
    losers = [gid for gid, v in zip(profit.gen_ids, profit.total) if v < -1e-6]
    print(f"cost recovery: {'all generators' if not losers else 'violated for ' + ', '.join(losers)}")
    return EXIT_OK


def cmd_simulate(args):
    path, case = _load(args)
    run = Run(args, path, case)
    sol = _solve(run)
    prices = compute_prices(sol)
    res = run.timed("simulate", run_simulation, case, sol.dispatch, args.samples, args.seed,
                    solution=sol, prices=prices, workers=args.workers)
    results.write_convergence(run.file("convergence.csv"), res)
    run.manifest()
    print(f"{case.name}: N={res.n_samples} seed={res.seed}")
    print(f"average cost {res.mean_cost:.6f} (SE {res.se_cost:.6f}), analytic {res.expected_cost:.6f}")
    print(f"average net revenue {res.mean_net_revenue:.6f} (SE {res.se_net_revenue:.6f}), "
          f"expected surplus {res.expected_net_revenue:.6f}")
    return EXIT_OK


def cmd_compare(args):
    path, case = _load(args)
    run = Run(args, path, case)
    kappas = parse_kappa_grid(args.kappa_grid)
    sol = _solve(run)
    rows = run.timed("compare", compare_models, case, kappas, args.samples, args.seed,
                     down_ratio=args.kappa_down_ratio, workers=args.workers, coopt=sol)
    results.write_comparison(run.file("comparison.csv"), rows)
    run.manifest()
    for r in rows:
        if r.status == "optimal":
            extra = "" if r.reduction_pct is None else f"  reduction {r.reduction_pct:.2f}%"
            print(f"{r.label:<40} expected {r.expected_total:.4f}  MC {r.mc_mean:.4f} (SE {r.mc_se:.4f}){extra}")
        else:
            print(f"{r.label:<40} {r.status}")
    return EXIT_OK


def cmd_validate(args):
    path, case = _load(args)
    print(f"{case.name}: valid")
    print(f"  buses {len(case.grid.buses)}, lines {len(case.grid.lines)}, generators {len(case.generators)}, "
          f"loads {len(case.loads)}")
    print(f"  periods T = {case.periods}, scenarios K = {len(case.scenarios)}, "
          f"base probability = {case.scenarios.base_probability:.6g}")
    for w in case_warnings(case):
        print(f"  warning: {w}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="erclear", description="Multi-period energy-reserve market clearing.")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--case", required=True, help="case JSON file or bundled name (" + ", ".join(BUNDLED) + ")")
        p.add_argument("--strict", action="store_true", help="treat case warnings as errors")
        p.add_argument("--initial-state", help="JSON file with g / r_up / r_down per generator")
        p.set_defaults(func=func)
        if name != "validate":
            p.add_argument("--out-dir", default="results", help="output directory (default: results)")
            p.add_argument("--require-initial-ramp", action="store_true",
                           help="fail if the case has no initial state for first-period ramping")
        return p

    command("solve", cmd_solve, "clear the market, write solution.csv and a KKT report")
    p = command("price", cmd_price, "write prices.csv and an envelope-theorem check")
    p.add_argument("--envelope-pairs", default="auto",
                   help="'auto', 'all', 'none' or GEN:PERIOD list, e.g. G1:1,G2:3")
    command("settle", cmd_settle, "write ledger, profit and surplus CSVs")
    for name, func, text in (("simulate", cmd_simulate, "Monte Carlo convergence of cost and net revenue"),
                             ("compare", cmd_compare, "compare against traditional reserve requirements")):
        p = command(name, func, text)
        p.add_argument("--samples", type=int, default=10000)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--workers", type=int, default=1, help="threads for the recourse LPs")
        if name == "compare":
            p.add_argument("--kappa-grid", default="0:0.1:0.01", help="up-reserve fractions a:b:step")
            p.add_argument("--kappa-down-ratio", type=float, default=0.0,
                           help="down requirement as a multiple of the up requirement")
    command("validate", cmd_validate, "check a case file and print diagnostics")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "samples", 1) < 1:
        print("error: --samples must be positive", file=sys.stderr)
        return EXIT_INPUT
    try:
        return args.func(args)
    except (Infeasible, Unbounded) as exc:
        print(f"{exc.status}: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except IssuesError as exc:
        print(f"{type(exc).__name__}: {len(exc.issues)} problem(s)", file=sys.stderr)
        for issue in exc.issues:
            print(f"  {issue}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalFailure as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except (InputError, ErclearError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception:  # pragma: no cover - last resort
        logger.exception("internal error")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
