import numpy as np
import pytest

from bilateral import robots


@pytest.fixture(scope="session")
def crane():
    return robots.crane_x7()


@pytest.fixture(scope="session")
def chain3():
    return robots.spatial_three_link()


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(mod.LINES):
            terminalreporter.write_line(line)
