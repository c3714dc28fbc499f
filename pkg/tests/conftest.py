import numpy as np
import pytest

from vulture_pid.lti import TANK_PLANT
from vulture_pid.sim import SimConfig


@pytest.fixture
def plant():
    return TANK_PLANT


@pytest.fixture
def sim_config():
    return SimConfig()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance_log():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
