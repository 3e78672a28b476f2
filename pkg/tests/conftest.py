"""Shared fixtures and the acceptance summary printed at the end of a run."""

import pytest

from qbm import ModelParams

ACCEPTANCE_LINES = []


def record(criterion, ok, detail):
    """Log one acceptance line; tests still assert on ``ok``."""
    line = f"{'PASS' if ok else 'FAIL'} criterion {criterion}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def bench():
    """The moderate-separation benchmark point used across modules."""
    return ModelParams(1.0, 0.05, 20.0, 5.0)
