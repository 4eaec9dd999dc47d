import math

import pytest
from hypothesis import HealthCheck, settings

from blk2d.geometry import build_domain

settings.register_profile("blk2d", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("blk2d")

# filled by test_acceptance.report(); echoed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def square():
    return build_domain("rectangle", math.pi, math.pi, 128, 8)


@pytest.fixture(scope="session")
def square256():
    return build_domain("rectangle", math.pi, math.pi, 256, 8)


@pytest.fixture(scope="session")
def strip():
    return build_domain("half_strip", None, math.pi / 2, 1023, 8, 0.25)
