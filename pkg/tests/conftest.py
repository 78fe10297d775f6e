import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

from secure_ris_uav import Scenario  # noqa: E402
from secure_ris_uav.channel import sample_realization  # noqa: E402

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def desk():
    return Scenario()


@pytest.fixture
def small():
    # short flight over the user with a 2 x 2 RIS
    return Scenario(Mx=2, Mz=2, q0=(-60.0, 100.0), q_f=(60.0, 100.0), T=12.4, delta_t=3.1)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def realization(desk):
    return sample_realization(desk, 3)


# -- acceptance report ------------------------------------------------------

ACCEPTANCE: dict[int, str] = {}
CRITERIA = 9


@pytest.fixture(scope="session")
def acceptance_log():
    def record(number: int, passed: bool, detail: str) -> bool:
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
        ACCEPTANCE[number] = line
        print(line)
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in range(1, CRITERIA + 1):
        terminalreporter.write_line(ACCEPTANCE.get(k, f"criterion {k}: NOT RUN"))
