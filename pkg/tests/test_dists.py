import math

import numpy as np
import pytest
from scipy import integrate

from mginf import dists
from mginf.dists import HolderClass

from conftest import ALL_FAMILIES


def test_cdf_examples():
    assert dists.cdf(dists.Exponential(1.0), 0.0) == 0.0
    assert dists.cdf(dists.Exponential(1.0), math.log(2)) == pytest.approx(0.5, rel=1e-15)
    assert dists.cdf(dists.DiracMixture((1.0,), (1.0,)), 0.5) == 0.0


def test_correlation_h_examples():
    assert dists.correlation_h(dists.Exponential(1.0), 0.0) == 1.0
    assert dists.correlation_h(dists.Exponential(1.0), 1.0) == pytest.approx(math.exp(-1), rel=1e-14)
    assert dists.correlation_h(dists.Uniform(0.0, 1.0), 0.5) == pytest.approx(0.25, rel=1e-14)


def test_second_moment_examples():
    assert dists.second_moment(dists.Exponential(1.0)) == pytest.approx(2.0)
    assert dists.second_moment(dists.Uniform(0.0, 1.0)) == pytest.approx(1 / 3)
    assert dists.second_moment(dists.DiracMixture((2.0,), (1.0,))) == pytest.approx(4.0)


def test_cdf_is_a_distribution_function(family):
    t = np.linspace(0, 20, 2001)
    g = family.cdf(t)
    assert family.cdf(0.0) == pytest.approx(0.0, abs=1e-15) or isinstance(family, dists.DiracMixture)
    assert np.all((g >= 0) & (g <= 1))
    assert np.all(np.diff(g) >= -1e-15)
    assert family.cdf(1e3) == pytest.approx(1.0, abs=1e-12)
    assert family.cdf(-1.0) == 0.0


def test_h_matches_quadrature(family):
    for t in [0.0, 0.1, 0.5, 1.0, 1.7, 3.0]:
        exact = family.correlation_h(t)
        quad = dists.quad_correlation_h(family, t)
        assert exact == pytest.approx(quad, rel=1e-8, abs=1e-13)


def test_h_even_unit_and_nonincreasing(family):
    assert family.correlation_h(0.0) == pytest.approx(1.0, rel=1e-14)
    t = np.linspace(0, 10, 501)
    h = family.correlation_h(t)
    assert np.all(np.diff(h) <= 1e-15)
    np.testing.assert_allclose(family.correlation_h(-t), h)


def test_mean_and_second_moment_by_quadrature(family):
    upper = dists._upper_quantile(family, 1e-14)
    pts = dists._breakpoints(family) or None
    m, _ = integrate.quad(lambda x: 1 - family.cdf(x), 0, upper, points=pts, limit=500)
    s, _ = integrate.quad(lambda x: 2 * x * (1 - family.cdf(x)), 0, upper, points=pts, limit=500)
    assert family.mean() == pytest.approx(m, rel=1e-7)
    assert family.second_moment() == pytest.approx(s, rel=1e-7)


def test_sum_h_bound(family):
    # sum_{i=1}^n H(i delta) <= mu K / (2 delta) with K = E[sigma^2]
    K = family.second_moment()
    for delta in [0.01, 0.1, 0.5]:
        n = int(50 / delta)
        total = dists.h_sequence(family, delta, n + 1)[1:].sum()
        assert total <= family.rate * K / (2 * delta) * (1 + 1e-12)


def test_samplers_match_moments(family, rng):
    x = family.sample(rng, 200_000)
    assert x.mean() == pytest.approx(family.mean(), rel=0.02)
    # residual law has tail H, so E[residual] = E[sigma^2] / (2 E[sigma])
    r = family.sample_residual(rng, 200_000)
    assert r.mean() == pytest.approx(family.second_moment() / (2 * family.mean()), rel=0.03)


def test_residual_ks(family, rng):
    from scipy import stats

    r = family.sample_residual(rng, 20_000)
    res = stats.kstest(r, lambda t: dists.residual_cdf(family, t))
    assert res.pvalue > 1e-3


def test_invalid_parameters():
    with pytest.raises(ValueError):
        dists.Exponential(0.0)
    with pytest.raises(ValueError):
        dists.Uniform(1.0, 1.0)
    with pytest.raises(ValueError):
        dists.DiracMixture((1.0, 2.0), (0.5, 0.6))
    with pytest.raises(ValueError):
        dists.DiracMixture((1.0,), (-1.0,))


def test_holder_class_checks_moment_bound():
    hc = HolderClass(beta=1.0, L=1.0, interval=(0.5, 1.5), K=1.0)
    with pytest.raises(ValueError, match="moment bound"):
        dists.Exponential(1.0, holder=hc)
    ok = HolderClass(beta=1.0, L=1.0, interval=(0.5, 1.5), K=2.0)
    assert dists.Exponential(1.0, holder=ok).holder is ok
    with pytest.raises(ValueError):
        HolderClass(beta=0.0, L=1.0, interval=(0, 1), K=1.0)
    with pytest.raises(ValueError):
        HolderClass(beta=1.0, L=1.0, interval=(1, 1), K=1.0)


def test_floor_beta_is_strict():
    assert HolderClass(2.0, 1.0, (0, 1), 1.0).floor_beta == 1
    assert HolderClass(2.5, 1.0, (0, 1), 1.0).floor_beta == 2
    assert HolderClass(0.5, 1.0, (0, 1), 1.0).floor_beta == 0


@pytest.mark.parametrize("d", ALL_FAMILIES, ids=repr)
def test_config_round_trip(d):
    again = dists.from_config(d.to_config())
    assert again == d


def test_from_config_holder_and_errors():
    d = dists.from_config({"family": "gamma", "shape": 2.0, "rate": 2.0,
                           "holder": {"beta": 2, "L": 1, "K": 5, "interval": [0.5, 1.5]}})
    assert d.holder.interval == (0.5, 1.5)
    with pytest.raises(ValueError, match="unknown service family"):
        dists.from_config({"family": "pareto"})
    with pytest.raises(ValueError, match="unexpected keys"):
        dists.from_config({"family": "exponential", "scale": 1.0})
