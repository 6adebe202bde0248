import math

import numpy as np
import pytest

from periodic_nsf.grid import make_grid
from periodic_nsf.model import PhysicalParams


@pytest.fixture(scope="session")
def params():
    return PhysicalParams()


@pytest.fixture(scope="session")
def grid16():
    return make_grid(2 * math.pi, 16)


@pytest.fixture(scope="session")
def grid32():
    return make_grid(2 * math.pi, 32)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_CRITERIA = []


@pytest.fixture
def criterion():
    """Record ``(number, passed, detail)`` for the summary printed at the end of the run."""

    def record(number, passed, detail):
        line = f"{'PASS' if passed else 'FAIL'} criterion {number}: {detail}"
        _CRITERIA.append((number, line))
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(_CRITERIA, key=lambda x: x[0]):
            terminalreporter.write_line(line)
