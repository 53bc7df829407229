import numpy as np
import pytest

from mginf import dists


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ALL_FAMILIES = [
    dists.Exponential(1.0),
    dists.Exponential(2.5),
    dists.Gamma(2.0, 2.0),
    dists.Gamma(0.7, 1.3),
    dists.Weibull(1.5, 1.0),
    dists.Weibull(0.8, 2.0),
    dists.Uniform(0.0, 1.0),
    dists.Uniform(0.5, 2.0),
    dists.LogNormal(0.0, 0.5),
    dists.DiracMixture((1.0,), (1.0,)),
    dists.DiracMixture((0.5, 2.0), (0.3, 0.7)),
]


@pytest.fixture(params=ALL_FAMILIES, ids=lambda d: repr(d))
def family(request):
    return request.param
