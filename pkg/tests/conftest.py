import numpy as np
import pytest

from raps.channel import SystemConfig
from raps.power_model import PowerModelParams


@pytest.fixture
def params():
    return PowerModelParams()


@pytest.fixture
def config():
    return SystemConfig()


@pytest.fixture
def small_config():
    return SystemConfig(k=3, n_subcarriers=12, t_slots=4)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# One line per acceptance criterion, printed after the run.
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def report():
    def add(number, ok, detail):
        ACCEPTANCE_LINES.append(f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}")

    return add


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split(":")[0].split()[1])):
            terminalreporter.write_line(line)
