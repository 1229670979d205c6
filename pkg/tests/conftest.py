import pytest

from ghzteleport.grid import make_grid


@pytest.fixture
def grid64():
    return make_grid(64, 16.0)


@pytest.fixture
def grid32():
    return make_grid(32, 16.0)


@pytest.fixture
def grid16():
    return make_grid(16, 8.0)


# one line per acceptance criterion, collected by tests/test_acceptance.py
ACCEPTANCE_LINES: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
