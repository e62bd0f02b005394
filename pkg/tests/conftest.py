import sys
from pathlib import Path

import pytest

from hdbouss import make_grid

sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture(scope="session")
def grid():
    """Desk-scale grid used by the acceptance runs."""
    return make_grid(n1=128, n2=256, half_width=10.0)


@pytest.fixture(scope="session")
def small_grid():
    return make_grid(n1=32, n2=64, half_width=10.0)


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import LINES

    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(LINES, key=lambda s: int(s.split()[2])):
            terminalreporter.write_line(line)
