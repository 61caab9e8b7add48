import numpy as np
import pytest

from mintime import Ball2, BallInf, LtiSystem

MULTI_A = [[-0.093, 0.25, 0.500], [-0.540, -0.255, 0.160], [-0.072, 0.525, -0.445]]
MULTI_B = [[0.580, -0.360], [0.0, 0.0], [0.0, 2.230]]


@pytest.fixture
def double_integrator():
    return LtiSystem([[1.0, 1.0], [0.0, 1.0]], [[0.0], [1.0]])


@pytest.fixture
def unit_box():
    return BallInf([1.0])


@pytest.fixture
def multi_input():
    return LtiSystem(MULTI_A, MULTI_B)


@pytest.fixture
def unit_ball2():
    return Ball2(1.0, 2)


def random_system(rng, n_max=3, m_max=2):
    n = int(rng.integers(1, n_max + 1))
    m = int(rng.integers(1, m_max + 1))
    return LtiSystem(rng.uniform(-1, 1, (n, n)), rng.uniform(-1, 1, (n, m)))


ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
