"""Closed-form joint law of the sampled queue-length vector.

The joint cumulant generating function of (X_1, ..., X_n) is rho * S_n(theta)
with a double sum over ordered pairs of sampling times; the mixed moments up
to order four follow from it.
"""
from __future__ import annotations

from typing import Callable, Sequence, Union

import numpy as np
from scipy.linalg import toeplitz

from .sim import GridSpec

HLookup = Union[Sequence[float], np.ndarray, Callable[[int], float]]


def _h(h: HLookup, lag: int) -> float:
    lag = abs(int(lag))
    if callable(h):
        return float(h(lag))
    return float(h[lag])


def log_mgf(h_seq, rho: float, theta) -> float:
    """log E exp(sum theta_i X_i) for the n consecutive samples X_1..X_n.

    ``h_seq[k]`` is H(k delta) for k = 0..n-1 (``h_seq[0]`` must be 1).
    """
    theta = np.asarray(theta, dtype=float)
    h_seq = np.asarray(h_seq, dtype=float)
    n = theta.size
    if h_seq.size < n:
        raise ValueError(f"need H_k for k < {n}, got {h_seq.size} values")
    if abs(h_seq[0] - 1.0) > 1e-12:
        raise ValueError("H_0 must equal 1")
    return log_mgf_at(h_seq, rho, np.arange(1, n + 1), theta)


def log_mgf_at(h: HLookup, rho: float, idx, theta) -> float:
    """Joint log-MGF of (X_{idx_1}, ..., X_{idx_m}) for sorted grid indices.

    Each ordered pair p < q contributes H_{idx_q - idx_p} (e^{theta_p}-1)(e^{theta_q}-1)
    times exp of the thetas strictly between them; the between-sum is taken
    from prefix sums so no intermediate exponential is formed twice.
    """
    idx = np.asarray(idx)
    theta = np.asarray(theta, dtype=float)
    if idx.shape != theta.shape or idx.ndim != 1:
        raise ValueError("idx and theta must be 1-d of equal length")
    if np.any(np.diff(idx) < 0):
        raise ValueError("indices must be sorted")
    m = theta.size
    em1 = np.expm1(theta)
    total = em1.sum()
    if m > 1:
        csum = np.concatenate([[0.0], np.cumsum(theta)])
        p, q = np.triu_indices(m, k=1)
        between = csum[q] - csum[p + 1]      # theta_{p+1} + ... + theta_{q-1}
        lags = idx[q] - idx[p]
        if callable(h):
            hv = np.array([_h(h, g) for g in lags])
        else:
            hv = np.asarray(h, dtype=float)[np.abs(lags)]
        total += np.sum(hv * em1[p] * np.exp(between) * em1[q])
    return float(rho * total)


def mgf(h_seq, rho: float, theta) -> float:
    return float(np.exp(log_mgf(h_seq, rho, theta)))


def mixed_moment2(h: HLookup, rho: float, i: int, j: int) -> float:
    return rho * rho + rho * _h(h, i - j)


def _q(*idx: int) -> int:
    return max(idx) - min(idx)


def mixed_moment3(h: HLookup, rho: float, i: int, j: int, k: int) -> float:
    """E[X_i X_j X_k]."""
    pair = _h(h, i - j) + _h(h, k - j) + _h(h, k - i)
    return rho**3 + rho**2 * pair + rho * _h(h, _q(i, j, k))


def mixed_moment4(h: HLookup, rho: float, i: int, j: int, k: int, m: int) -> float:
    """E[X_i X_j X_k X_m] for arbitrary (unsorted) indices."""
    H = lambda a, b: _h(h, a - b)  # noqa: E731
    pairs = H(j, i) + H(k, i) + H(m, i) + H(k, j) + H(m, j) + H(m, k)
    triples = _h(h, _q(i, j, k)) + _h(h, _q(i, j, m)) + _h(h, _q(j, k, m)) + _h(h, _q(i, k, m))
    products = H(j, i) * H(m, k) + H(k, i) * H(m, j) + H(k, j) * H(m, i)
    return (rho**4 + rho**3 * pairs + rho**2 * (triples + products)
            + rho * _h(h, _q(i, j, k, m)))


def covariance_matrix(h, grid: GridSpec) -> np.ndarray:
    """Correlation matrix Sigma(H)_{ij} = H((i - j) delta).

    ``h`` is either a callable of time or a sequence of H(k delta), k >= 0.
    """
    if callable(h):
        col = np.asarray([h(k * grid.delta) for k in range(grid.n)], dtype=float)
    else:
        col = np.asarray(h, dtype=float)[: grid.n]
        if col.size < grid.n:
            raise ValueError(f"need {grid.n} lags, got {col.size}")
    return toeplitz(col)
