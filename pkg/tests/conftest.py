import sys

import pytest

from brwkit.env import DistSpec, sample_environment


@pytest.fixture(scope="session")
def env7():
    """Two-point {1, 2} environment, seed 7, on [-120, 120]."""
    return sample_environment(DistSpec("two_point", 1.0, 2.0), (-120, 120), 7)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.LINES:
        terminalreporter.write_line(line)
