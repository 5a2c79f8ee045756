from dataclasses import replace

import numpy as np
import pytest

from erclear.errors import Infeasible, RecourseInfeasible
from erclear.traditional import (
    ReserveRequirement,
    cost_breakdown,
    deliverable_reserves,
    expected_total_cost,
    recourse_evaluate,
    solve_traditional,
)

from .oracles import feasible_random_cases


def test_requirement_driven_reserve(case_b):
    res = solve_traditional(case_b, ReserveRequirement(0.2))
    assert res.dispatch.g[0, 0] == pytest.approx(50.0)
    assert res.dispatch.r_up[0, 0] == pytest.approx(10.0)
    assert res.base_cost == pytest.approx(510.0)


def test_zero_requirement(case_b):
    res = solve_traditional(case_b, ReserveRequirement(0.0))
    assert res.dispatch.r_up[0, 0] == pytest.approx(0.0, abs=1e-9)
    assert res.base_cost == pytest.approx(500.0)
    assert recourse_evaluate(case_b, res.dispatch, "k1", 0).cost == pytest.approx(10000.0)
    assert expected_total_cost(case_b, res.dispatch) == pytest.approx(1500.0)


def test_requirement_beyond_capacity_is_infeasible(case_b):
    # p_max - p_min = 100 MW, and the requirement is 2.1 * 50 = 105 MW
    with pytest.raises(Infeasible):
        solve_traditional(case_b, ReserveRequirement(2.1))


def test_negative_requirement_rejected():
    with pytest.raises(ValueError):
        ReserveRequirement(-0.1)


def test_recourse_of_coopt_dispatch(case_b, sol_b):
    assert recourse_evaluate(case_b, sol_b.dispatch, "k1", 0).cost == pytest.approx(120.0)
    assert recourse_evaluate(case_b, sol_b.dispatch, "base", 0).cost == 0.0
    assert expected_total_cost(case_b, sol_b.dispatch) == pytest.approx(522.0, rel=1e-9)
    trad = solve_traditional(case_b, ReserveRequirement(0.2))
    assert expected_total_cost(case_b, trad.dispatch) == pytest.approx(522.0, rel=1e-9)


def test_coopt_score_equals_objective(sol_c, sol_demo):
    for sol in (sol_c, sol_demo):
        assert expected_total_cost(sol.case, sol.dispatch) == pytest.approx(sol.objective, rel=1e-7)


def test_coopt_reserves_are_always_deliverable(sol_c, sol_demo):
    for sol in (sol_c, sol_demo):
        up, down = deliverable_reserves(sol.case, sol.dispatch)
        np.testing.assert_allclose(up, sol.r_up, atol=1e-7)
        np.testing.assert_allclose(down, sol.r_down, atol=1e-7)


def test_undeliverable_reserve_is_capped(case_c):
    trad = solve_traditional(case_c, ReserveRequirement(0.11))
    assert trad.dispatch.r_up[0, 0] == pytest.approx(5.5)
    # a 40 MW step under a 45 MW ramp leaves only 5 MW of headroom usable at t=1
    up, _ = deliverable_reserves(case_c, trad.dispatch)
    assert up[0, 0] == pytest.approx(5.0)
    assert up[1, 0] == pytest.approx(trad.dispatch.r_up[1, 0])


@pytest.mark.parametrize("kappa", [0.0, 0.05, 0.1, 0.2, 0.3])
def test_dominance_on_random_cases(kappa):
    for case, sol in feasible_random_cases(8, start=40):
        try:
            trad = solve_traditional(case, ReserveRequirement(kappa, kappa))
        except Infeasible:
            continue
        bd = cost_breakdown(case, trad.dispatch)
        if not bd.feasible:
            continue
        assert bd.total >= sol.objective - 1e-7 * abs(sol.objective), (case.name, kappa)


def test_dominance_on_demo(demo, sol_demo):
    totals = []
    for kappa in (0.06, 0.1, 0.15, 0.2):
        trad = solve_traditional(demo, ReserveRequirement(kappa, kappa))
        totals.append(expected_total_cost(demo, trad.dispatch))
    assert min(totals) >= sol_demo.objective * (1 - 1e-7)


def test_demo_low_requirement_cannot_cover_outages(demo):
    trad = solve_traditional(demo, ReserveRequirement(0.02, 0.02))
    with pytest.raises(RecourseInfeasible):
        expected_total_cost(demo, trad.dispatch)
    assert not cost_breakdown(demo, trad.dispatch).feasible
