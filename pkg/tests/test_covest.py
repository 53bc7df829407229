import math

import numpy as np
import pytest

from mginf import covest, dists, moments
from mginf.gaussian import sample_stationary_gaussian
from mginf.sim import GridSpec, simulate_batch


def test_rho_hat_examples():
    assert covest.rho_hat(np.full(7, 3), 4) == 3
    assert covest.rho_hat([1, 2, 3, 4], 1) == 2
    assert covest.rho_hat([0, 0, 0, 6], 0) == 1.5
    with pytest.raises(ValueError):
        covest.rho_hat([1, 2, 3], 3)


def test_r_hat_examples():
    for k in range(5):
        assert covest.r_hat(np.full(6, 2.5), k) == 0.0
    assert covest.r_hat([0, 2, 0, 2], 0) == 1.0
    with pytest.raises(ValueError):
        covest.r_hat([0, 2, 0, 2], 4)


def test_r_hat_uncentered_examples():
    assert covest.r_hat_uncentered(np.zeros(5), 2) == 0.0
    assert covest.r_hat_uncentered([1, 1, 1, 1], 2) == 1.0
    with pytest.raises(ValueError):
        covest.r_hat_uncentered([1, 1], -1)


def test_integer_and_float_paths_agree(rng):
    x = rng.poisson(30, 5000)
    for k in (0, 1, 17, 4999):
        assert covest.r_hat(x, k) == pytest.approx(covest.r_hat(x.astype(float), k), rel=1e-12, abs=1e-12)
        assert covest.rho_hat(x, k) == pytest.approx(covest.rho_hat(x.astype(float), k), rel=1e-15)


def test_centering_identity(rng):
    x = rng.poisson(4, 300)
    for k in (0, 3, 50, 299):
        m = x.size - k
        c = x - covest.rho_hat(x, k)
        # centred products on the first m pairs only; the tail pairing uses the same mean
        want = math.fsum(c[:m] * c[k:k + m]) / m
        assert covest.r_hat(x, k) == pytest.approx(want, rel=1e-12, abs=1e-12)
        assert covest.r_hat(x, k) == pytest.approx(covest.r_hat_uncentered(c, k), rel=1e-12, abs=1e-12)


def test_order_independent_summation():
    x = np.array([1e16, 1.0, -1e16, 1.0] * 50)
    assert covest.rho_hat(x, 0) == pytest.approx(2.0 / 4)


def test_large_counts_do_not_overflow():
    x = np.full(1000, 2**40, dtype=np.int64)
    x[::2] += 1
    assert covest.r_hat(x, 0) == pytest.approx(0.25)


def expected_r_hat(cov: np.ndarray, k: int) -> float:
    """Exact mean of r_hat at lag k for a process with covariance matrix ``cov``."""
    m = cov.shape[0] - k
    head = np.arange(m)
    w = np.zeros(cov.shape[0])
    w[:m] = 1.0 / m
    cov_with_mean = cov @ w
    var_mean = w @ cov @ w
    return float(np.mean(cov[head, head + k] - cov_with_mean[head] - cov_with_mean[head + k]) + var_mean)


def test_lag_covariances_match_theory():
    grid = GridSpec(0.25, 200)
    for d in (dists.Exponential(1.0), dists.Uniform(0.0, 2.0)):
        x = simulate_batch(d, 2.0, grid, seed=5, replicates=4000)
        rho = 2.0 * d.mean()
        for k in (1, 4, 10):
            vals = np.array([covest.r_hat(row, k) for row in x])
            se = vals.std(ddof=1) / math.sqrt(vals.size)
            cov = rho * moments.covariance_matrix(d.correlation_h, grid)
            assert abs(vals.mean() - expected_r_hat(cov, k)) < 3 * se


def test_expected_r_hat_white_noise():
    # i.i.d. unit variance: E r_hat_0 = 1 - 1/n exactly
    assert expected_r_hat(np.eye(10), 0) == pytest.approx(0.9)


def test_uncentered_gaussian_lag_covariances():
    delta, n = 0.1, 256
    gamma = np.exp(-delta * np.arange(n))
    x = sample_stationary_gaussian(gamma, seed=3, size=3000)
    for k in (1, 5):
        vals = np.array([covest.r_hat_uncentered(row, k) for row in x])
        se = vals.std(ddof=1) / math.sqrt(vals.size)
        assert abs(vals.mean() - math.exp(-k * delta)) < 3 * se


def test_mse_halves_when_horizon_doubles():
    d = dists.Exponential(1.0)
    truth = float(d.correlation_h(1.0))
    mse = []
    for n in (2048, 4096):
        x = simulate_batch(d, 1.0, GridSpec(0.5, n), seed=n, replicates=2000)
        est = np.array([covest.r_hat(row, 2) for row in x])
        mse.append(np.mean((est - truth) ** 2))
    assert mse[0] / mse[1] == pytest.approx(2.0, rel=0.25)


def test_psi_cases():
    T, delta, h = 100.0, 0.1, 1.0
    assert covest.psi(5.0, T, h, delta) == pytest.approx(T - 5.0 - h)
    assert covest.psi(0.5, T, h, delta) == pytest.approx(T - 2 * h)
    assert covest.psi(T - delta - 0.5 * h, T, h, delta) == pytest.approx(delta)
    with pytest.raises(ValueError):
        covest.psi(T, T, h, delta)


def test_variance_bound_value():
    d = dists.Exponential(1.0)
    grid = GridSpec(0.5, 40)
    h_sum = math.fsum(math.exp(-0.5 * i) for i in range(1, 41))
    want = 0.5 * (4 + 2) * h_sum / (1.0 * (20.0 - 3.0 - 1.0))
    assert covest.variance_bound(d, 2.0, grid, 1.0, 3.0) == pytest.approx(want, rel=1e-12)
