from pathlib import Path

import numpy as np
import pytest

from fastqz import Polynomial, companion_pencil

TEST_DATA = Path(__file__).parent / "data"


def pytest_generate_tests(metafunc):
    if "seed" in metafunc.fixturenames:
        metafunc.parametrize("seed", [0, 1, 2])


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def data_dir():
    return TEST_DATA


@pytest.fixture
def random_companion():
    """Factory: companion pencil of a random degree-n polynomial with
    coefficients uniform in [-1, 1]."""

    def _make(n, seed=0, normalize=True):
        coeffs = np.random.default_rng(seed).uniform(-1.0, 1.0, n + 1)
        return companion_pencil(Polynomial(coeffs), normalize=normalize)

    return _make
