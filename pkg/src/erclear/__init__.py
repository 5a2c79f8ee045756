"""Multi-period stochastic energy-reserve co-optimization, pricing and settlement."""

__version__ = "0.1.0"

from .case import Generator, InitialState, Load, MarketCase  # noqa: E402
from .casefile import dump_case, load_case, parse_case  # noqa: E402
from .coopt import build_model_vi, build_model_vii_restricted, solve_model_vi  # noqa: E402
from .lp import check_kkt, solve_lp  # noqa: E402
from .montecarlo import compare_models, run_simulation, sample_realization  # noqa: E402
from .network import Grid, Line, compute_shift_factors  # noqa: E402
from .pricing import compute_prices, envelope_check  # noqa: E402
from .scenarios import ExplicitFluctuation, NonBaseScenario, PercentRule, ScenarioSet  # noqa: E402
from .settlement import expected_merchandise_surplus, generator_profit_report, settle  # noqa: E402
from .traditional import ReserveRequirement, expected_total_cost, solve_traditional  # noqa: E402

__all__ = [
    "Generator", "InitialState", "Load", "MarketCase", "dump_case", "load_case", "parse_case",
    "build_model_vi", "build_model_vii_restricted", "solve_model_vi", "check_kkt", "solve_lp",
    "compare_models", "run_simulation", "sample_realization", "Grid", "Line", "compute_shift_factors",
    "compute_prices", "envelope_check", "ExplicitFluctuation", "NonBaseScenario", "PercentRule", "ScenarioSet",
    "expected_merchandise_surplus", "generator_profit_report", "settle", "ReserveRequirement",
    "expected_total_cost", "solve_traditional",
]
