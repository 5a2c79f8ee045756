import pytest

from erclear.cases import case_a as _a, case_b as _b, case_c as _c, demo24 as _demo
from erclear.coopt import solve_model_vi


@pytest.fixture(scope="session")
def case_a():
    return _a()


@pytest.fixture(scope="session")
def case_b():
    return _b()


@pytest.fixture(scope="session")
def case_c():
    return _c()


@pytest.fixture(scope="session")
def demo():
    return _demo()


@pytest.fixture(scope="session")
def sol_a(case_a):
    return solve_model_vi(case_a)


@pytest.fixture(scope="session")
def sol_b(case_b):
    return solve_model_vi(case_b)


@pytest.fixture(scope="session")
def sol_c(case_c):
    return solve_model_vi(case_c)


@pytest.fixture(scope="session")
def sol_demo(demo):
    return solve_model_vi(demo)
