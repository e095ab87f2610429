import numpy as np
import pytest

from rdattract.grid import build_grid
from rdattract.model import SystemSpec

CANON_A = (3.0, 2.0)
CANON_B = ((2.0, 0.1), (0.1, 2.0))


@pytest.fixture
def canonical():
    return SystemSpec.lotka_volterra(CANON_A, CANON_B)


@pytest.fixture
def negative():
    return SystemSpec.lotka_volterra(CANON_A, ((2.0, 1.0), (1.0, 2.0)))


@pytest.fixture
def grid1():
    return build_grid(1, [1.0], [101])


@pytest.fixture
def small_grid():
    return build_grid(1, [1.0], [11])


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
