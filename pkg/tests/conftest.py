import sys

import pytest

from cflrh.fields import GaussianSpec, solve_gaussian
from cflrh.fields import sample_exact
from cflrh.lax import plane_wave


@pytest.fixture(scope="session")
def pw():
    return plane_wave(0.3, 0.2, 1.0)


@pytest.fixture(scope="session")
def pw_grid(pw):
    return sample_exact(pw, 4.0, 1.0, 129, 65)


@pytest.fixture(scope="session")
def gauss_grid():
    return solve_gaussian(GaussianSpec())



def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for k in sorted(results):
            terminalreporter.write_line(results[k])
