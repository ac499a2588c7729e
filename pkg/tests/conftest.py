import numpy as np
import pytest

from gengauss.measures import jacobi_measure, laguerre_measure


@pytest.fixture
def legendre():
    return jacobi_measure(0.0, 0.0)


@pytest.fixture
def laguerre():
    return laguerre_measure(0.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
