"""Collects one summary line per acceptance criterion and prints them after the run."""

import pytest

ACCEPTANCE_LINES = {}


@pytest.fixture
def acceptance():
    """Return ``record(number, ok, detail)`` for the acceptance summary."""

    def record(number, ok, detail):
        ACCEPTANCE_LINES[number] = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[number])
