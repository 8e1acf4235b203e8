import numpy as np
import pytest

from ultraslow import weight
from ultraslow.catalog import catalog

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def weights():
    return catalog()


@pytest.fixture(scope="session")
def uniform():
    return weight.constant(1.0)


@pytest.fixture(scope="session")
def linear():
    return weight.power_near_zero(2.0, 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2])):
            terminalreporter.write_line(line)
