"""Lag-covariance estimators for a sampled path.

Integer (count) samples are summed exactly in Python integers; float samples
go through ``math.fsum``. Either way the result does not depend on summation
order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dists import ServiceDist
from .sim import GridSpec


@dataclass(frozen=True)
class CovEstimate:
    k: int
    rho_hat_k: float
    r_hat_k: float


def _check_lag(x: np.ndarray, k: int) -> int:
    n = x.size
    if int(k) != k or not 0 <= k <= n - 1:
        raise ValueError(f"lag k={k} outside 0..{n - 1}")
    return int(k)


def _is_integral(x: np.ndarray) -> bool:
    return np.issubdtype(x.dtype, np.integer)


def _isum(a: np.ndarray) -> int:
    return int(a.sum(dtype=np.int64)) if _int64_safe(a, a.size) else int(a.sum(dtype=object))


def _idot(a: np.ndarray, b: np.ndarray) -> int:
    bound = max(_maxabs(a), _maxabs(b))
    if bound * bound * a.size < 2**62:
        return int(np.dot(a.astype(np.int64), b.astype(np.int64)))
    return int(np.dot(a.astype(object), b.astype(object)))


def _maxabs(a: np.ndarray) -> int:
    return int(np.abs(a).max()) if a.size else 0


def _int64_safe(a: np.ndarray, m: int) -> bool:
    return _maxabs(a) * max(m, 1) < 2**62


def rho_hat(samples, k: int) -> float:
    """Mean of the first n - k samples."""
    x = np.asarray(samples)
    k = _check_lag(x, k)
    m = x.size - k
    if _is_integral(x):
        return _isum(x[:m]) / m
    return math.fsum(x[:m]) / m


def r_hat(samples, k: int) -> float:
    """Centred lag-k covariance; the mean is re-estimated from the first n - k samples."""
    x = np.asarray(samples)
    k = _check_lag(x, k)
    m = x.size - k
    head, tail = x[:m], x[k:]
    if _is_integral(x):
        # sum (x_i - rho)(x_{i+k} - rho) = S_xy - S_x S_y / m with rho = S_x / m
        s_x, s_y, s_xy = _isum(head), _isum(tail), _idot(head, tail)
        return (m * s_xy - s_x * s_y) / (m * m)
    mean = math.fsum(head) / m
    return math.fsum((head - mean) * (tail - mean)) / m


def r_hat_uncentered(samples, k: int) -> float:
    """(1/(n-k)) sum x_i x_{i+k}; for zero-mean processes."""
    x = np.asarray(samples)
    k = _check_lag(x, k)
    m = x.size - k
    if _is_integral(x):
        return _idot(x[:m], x[k:]) / m
    return math.fsum(x[:m] * x[k:]) / m


def estimate(samples, k: int) -> CovEstimate:
    return CovEstimate(int(k), rho_hat(samples, k), r_hat(samples, k))


def r_hat_lags(samples, lags, centered: bool = True) -> np.ndarray:
    f = r_hat if centered else r_hat_uncentered
    return np.array([f(samples, k) for k in lags], dtype=float)


def psi(x0: float, T: float, h: float, delta: float) -> float:
    """Effective sample length entering the variance bound at x0."""
    if not 0 <= x0 <= T - delta + 1e-12:
        raise ValueError(f"x0={x0} outside [0, T - delta]")
    if x0 <= h:
        return T - 2 * h
    if x0 > T - delta - h:
        return delta
    return T - x0 - h


def variance_bound(d: ServiceDist, lam: float, grid: GridSpec, h: float, x0: float,
                   c4: float = 1.0) -> float:
    """C4 delta (rho^2 + rho) sum_{i=1}^n H_i / (h^2 psi_{x0}(T)).

    Bounds E|sum_k a_k(x0) (R_hat_k - R_k)|^2.
    """
    rho = lam * d.mean()
    h_sum = math.fsum(np.asarray(d.correlation_h(grid.times), dtype=float))
    return c4 * grid.delta * (rho * rho + rho) * h_sum / (h * h * psi(x0, grid.T, h, grid.delta))
