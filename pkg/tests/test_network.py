import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from erclear.errors import GridError, IslandingOutage, UnknownLine
from erclear.network import Grid, Line, apply_outages, compute_shift_factors, grid_issues, validate_grid

from .oracles import _random_grid, ptdf_pinv


def triangle(slack="3"):
    lines = (Line("L12", "1", "2", 0.1, 100), Line("L13", "1", "3", 0.1, 100), Line("L23", "2", "3", 0.1, 100))
    return Grid(("1", "2", "3"), lines, slack)


def kinds(grid):
    return {i.kind for i in grid_issues(grid)}


def test_two_bus_valid_and_path_valid():
    assert validate_grid(Grid(("1", "2"), (Line("a", "1", "2", 0.1, 10),))) is not None
    assert not grid_issues(Grid(("1", "2", "3"), (Line("a", "1", "2", 0.1, 10), Line("b", "2", "3", 0.1, 10))))


def test_isolated_bus_reported():
    grid = Grid(("1", "2", "3", "4"), (Line("a", "1", "2", 0.1, 10), Line("b", "2", "3", 0.1, 10)))
    issues = grid_issues(grid)
    assert [(i.kind, i.where) for i in issues] == [("Disconnected", "bus 4")]
    with pytest.raises(GridError):
        validate_grid(grid)


def test_all_violations_collected():
    grid = Grid(("1", "2", "2"), (Line("a", "1", "2", -0.1, 10), Line("a", "1", "2", 0.1, 0)))
    assert {"DuplicateId", "NonPositiveReactance", "NonPositiveLimit"} <= kinds(grid)


def test_two_bus_shift_factor():
    sf = compute_shift_factors(Grid(("1", "2"), (Line("a", "1", "2", 0.1, 10),), slack="2"))
    assert sf.matrix[0, sf.bus_ids.index("1")] == pytest.approx(1.0)
    assert sf.matrix[0, sf.bus_ids.index("2")] == 0.0


def test_triangle_against_pseudo_inverse_oracle():
    grid = triangle()
    sf = compute_shift_factors(grid)
    oracle = ptdf_pinv(["1", "2", "3"], [(l.from_bus, l.to_bus, l.reactance) for l in grid.lines], "3")
    np.testing.assert_allclose(sf.matrix, oracle, atol=1e-12)
    assert sf.matrix[grid.line_ids.index("L13"), 0] == pytest.approx(2 / 3)
    assert sf.matrix[grid.line_ids.index("L12"), 0] == pytest.approx(1 / 3)


def test_default_slack_is_lowest_bus():
    grid = Grid(("10", "2", "3"), (Line("a", "10", "2", 0.1, 1), Line("b", "2", "3", 0.1, 1)))
    assert grid.slack_bus == "2"


def test_outage_reduces_to_path():
    reduced = apply_outages(triangle(), ("L12",))
    assert not grid_issues(reduced)
    sf = compute_shift_factors(reduced)
    assert sf.matrix[reduced.line_ids.index("L13"), 0] == pytest.approx(1.0)


def test_outage_errors():
    with pytest.raises(IslandingOutage):
        apply_outages(Grid(("1", "2"), (Line("a", "1", "2", 0.1, 10),)), ("a",))
    with pytest.raises(UnknownLine):
        apply_outages(triangle(), ("nope",))


def _kcl_residual(grid, sf, b):
    idx = {x: i for i, x in enumerate(grid.buses)}
    net = np.zeros(len(grid.buses))
    for r, ln in enumerate(grid.lines):
        f = sf.matrix[r, idx[b]] if b in idx else 0.0
        net[idx[ln.from_bus]] -= f
        net[idx[ln.to_bus]] += f
    expected = np.zeros(len(grid.buses))
    expected[idx[b]] -= 1.0
    expected[idx[grid.slack_bus]] += 1.0
    return np.abs(net - expected).max()


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 7))
def test_kcl_linearity_and_slack_column(seed, n_bus):
    grid = _random_grid(np.random.default_rng(seed), n_bus)
    sf = compute_shift_factors(grid)
    for b in grid.buses:
        assert _kcl_residual(grid, sf, b) <= 1e-9
    assert np.all(sf.matrix[:, grid.buses.index(grid.slack_bus)] == 0.0)
    assert np.all(np.abs(sf.matrix) <= 1.0 + 1e-12)
    rng = np.random.default_rng(seed + 1)
    p, q = rng.normal(size=n_bus), rng.normal(size=n_bus)
    np.testing.assert_allclose(sf.flows(2.0 * p - 3.0 * q), 2.0 * sf.flows(p) - 3.0 * sf.flows(q), atol=1e-9)
    oracle = ptdf_pinv(list(grid.buses), [(l.from_bus, l.to_bus, l.reactance) for l in grid.lines], grid.slack_bus)
    np.testing.assert_allclose(sf.matrix, oracle, atol=1e-9)


def test_contingency_factors_equal_reduced_grid_factors():
    grid = Grid(("1", "2", "3", "4"), triangle().lines + (Line("L34", "3", "4", 0.2, 50), Line("L14", "1", "4", 0.3, 50)))
    reduced = apply_outages(grid, ("L13",))
    direct = Grid(grid.buses, tuple(l for l in grid.lines if l.id != "L13"))
    np.testing.assert_allclose(compute_shift_factors(reduced).matrix, compute_shift_factors(direct).matrix)


def test_scenario_limit_defaults_to_base_limit():
    ln = Line("a", "1", "2", 0.1, 40, (("k1", 55.0),))
    assert ln.limit_for("k1") == 55.0
    assert ln.limit_for("k2") == 40
