import numpy as np
import pytest

from jdac.volume import Volume, make_phantom

# (criterion, passed, detail) lines filled in by test_acceptance.py
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in sorted(ACCEPTANCE_LINES, key=lambda t: int(t[0].split()[0][2:])):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")


@pytest.fixture(scope="session")
def phantom():
    return make_phantom((64, 64, 64), "ellipsoids", 7)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def noise_volume(sigma, seed, dims=(64, 64, 64), mean=0.0):
    return Volume(mean + np.random.default_rng(seed).normal(0.0, sigma, dims))
