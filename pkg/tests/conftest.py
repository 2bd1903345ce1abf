import numpy as np
import pytest

from ldpnet import CorrelationKernel, ModelParams


def random_config(rng, n, T, scale=1.5):
    return scale * rng.standard_normal((2 * n + 1, T + 1))


def random_cov_sequence(rng, n, T, rank=3):
    """Covariance-type lag sequence (FFT order): lag moments of a random stationary field."""
    from ldpnet.empirical import lag_moments

    N = 2 * n + 1
    x = rng.standard_normal((rank, N, T))
    return sum(lag_moments(x[r]) for r in range(rank))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def desk():
    return ModelParams(n=1, T=2)


KERNELS = {
    "dirac": CorrelationKernel.dirac(0.25),
    "separable": CorrelationKernel.separable_geometric(0.25, 0.5, 0.5),
}
