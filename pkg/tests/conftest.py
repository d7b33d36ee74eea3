import numpy as np
import pytest
from hypothesis import settings

import ssvbounds
from ssvbounds.formats import read_state_space

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


def crandn(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def random_normal(rng, n):
    """Normal matrix U diag(lam) U^H."""
    U, _ = np.linalg.qr(crandn(rng, n, n))
    return U @ np.diag(crandn(rng, n)) @ U.conj().T


def rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def academic():
    return read_state_space(ssvbounds.data_path("academic_example.json"))


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
