import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

from solerlab.clifford import build_algebra  # noqa: E402
from solerlab.profiles import Nonlinearity, solve_soler_profile  # noqa: E402

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

from verdicts import ACCEPTANCE_LINES  # noqa: E402


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])


@pytest.fixture(scope="session")
def cubic():
    return Nonlinearity.power(1.0)


@pytest.fixture(scope="session")
def alg12():
    return build_algebra(1, 2)


@pytest.fixture(scope="session")
def alg34():
    return build_algebra(3, 4)


@pytest.fixture(scope="session")
def profile_09(cubic):
    return solve_soler_profile(0.9, 1.0, 1, cubic)


@pytest.fixture(scope="session")
def profile_3d(cubic):
    return solve_soler_profile(0.9, 1.0, 3, cubic)
