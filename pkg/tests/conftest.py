import numpy as np
import pytest

from sml.models import MmhParams, ds_system, linear_system, mmh_system

# acceptance lines collected by tests/test_acceptance.py
ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def mmh():
    return mmh_system(MmhParams(1.0, 0.5))


@pytest.fixture(scope="session")
def mmh_p():
    return MmhParams(1.0, 0.5)


@pytest.fixture(scope="session")
def ds():
    return ds_system()


@pytest.fixture(scope="session")
def lin():
    return linear_system(1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line)
