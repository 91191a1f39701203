import numpy as np
import pytest

from gaugeflow.grid import make_grid

_CRITERIA: list[str] = []


def record_criterion(number, title, ok, detail):
    """Print one acceptance line and keep it for the terminal summary."""
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title} | {detail}"
    print(line)
    _CRITERIA.append(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for line in _CRITERIA:
        terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def grid64():
    return make_grid(4.0, 64, "periodic")
