import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from nvent import SpinSystem, StaticGeometry  # noqa: E402


@pytest.fixture
def system():
    return SpinSystem.default()


@pytest.fixture
def geometry():
    return StaticGeometry(10e-9)


def pytest_terminal_summary(terminalreporter):
    import verdicts

    lines = verdicts.summary_lines()
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
