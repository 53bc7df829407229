"""Minimum-norm derivative weights on a lag segment.

For a target point x the weights a_k, k in M = {k : k delta in D_x}, minimise
sum a_k^2 subject to sum a_k = 0 and sum a_k (k delta)^j = j x^(j-1), j = 1..ell,
so that sum a_k p(k delta) = p'(x) for every polynomial of degree <= ell.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np
from scipy import linalg

from .sim import GridSpec

RESIDUAL_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class WeightSet:
    x: float
    segment: tuple[float, float]
    indices: np.ndarray
    weights: np.ndarray
    ell: int
    delta: float

    @property
    def N(self) -> int:
        return int(self.indices.size)

    @property
    def norm2(self) -> float:
        return float(np.linalg.norm(self.weights))

    @property
    def norm1(self) -> float:
        return float(np.abs(self.weights).sum())

    def as_dict(self) -> dict[int, float]:
        return dict(zip(self.indices.tolist(), self.weights.tolist()))


def segment(x: float, h: float, T: float, delta: float) -> tuple[float, float]:
    """The lag window D_x: centred in the interior, clamped at both ends."""
    if not h > 0:
        raise ValueError("h must be positive")
    end = T - delta
    if not (0 <= x <= end + 1e-12 * max(1.0, T)):
        raise ValueError(f"x={x} outside [0, T - delta] = [0, {end}]")
    if x <= h:
        return (0.0, 2 * h)
    if x > end - h:
        return (end - 2 * h, end)
    return (x - h, x + h)


def segment_case(x: float, h: float, T: float, delta: float) -> str:
    """'interior', 'left' or 'right' according to which branch of D_x applies."""
    segment(x, h, T, delta)
    if x <= h:
        return "left"
    if x > T - delta - h:
        return "right"
    return "interior"


def grid_indices(seg: tuple[float, float], delta: float, n: int | None = None) -> np.ndarray:
    """{k >= 1 : k delta in seg}, with a relative slack for rounding at the ends."""
    lo, hi = seg
    eps = 1e-9
    k_lo = max(1, math.ceil(lo / delta - eps))
    k_hi = math.floor(hi / delta + eps)
    if n is not None:
        k_hi = min(k_hi, n)
    return np.arange(k_lo, k_hi + 1)


def min_feasible_h(ell: int, delta: float) -> float:
    return 0.5 * (ell + 2) * delta


def solve_weights(x: float, seg: tuple[float, float], grid: GridSpec, ell: int) -> WeightSet:
    """Solve the minimum-norm problem on ``seg`` for degree ``ell``.

    The constraints are rewritten in the scaled monomials ((t - x)/s)^j, s the
    segment half-length, which span the same polynomial space; raw powers of
    k delta are hopeless once x/h is large. The minimum-norm solution of the
    (ell+1) x N system comes from a pivoted QR of its transpose.
    """
    if int(ell) != ell or ell < 1:
        raise ValueError("ell must be a positive integer")
    ell = int(ell)
    idx = grid_indices(seg, grid.delta, grid.n - 1)
    if idx.size < ell + 1:
        raise ValueError(
            f"only {idx.size} grid points in D_x={seg}; need ell+1={ell + 1} "
            f"(window must satisfy h >= (ell+2) delta / 2 = {min_feasible_h(ell, grid.delta):g})"
        )
    t = idx * grid.delta
    scale = 0.5 * (seg[1] - seg[0])
    u = (t - x) / scale
    V = np.vander(u, ell + 1, increasing=True).T          # rows j = 0..ell
    b = np.zeros(ell + 1)
    b[1] = 1.0 / scale                                    # d/dt ((t-x)/s)^j at t = x

    Q, R, piv = linalg.qr(V.T, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    if diag.min() <= 1e-13 * diag.max():
        raise ValueError("infeasible design: constraint matrix is rank deficient")
    y = linalg.solve_triangular(R, b[piv], trans="T")
    a = Q @ y

    resid = np.abs(V @ a - b).max()
    if resid > RESIDUAL_TOL * (np.abs(V) @ np.abs(a)).max():
        raise ArithmeticError(f"constraint residual {resid:.3e} exceeds tolerance")
    return WeightSet(float(x), (float(seg[0]), float(seg[1])), idx, a, ell, grid.delta)


def weights_at(x: float, h: float, grid: GridSpec, ell: int) -> WeightSet:
    return solve_weights(x, segment(x, h, grid.T, grid.delta), grid, ell)


def apply_weights(w: WeightSet, values) -> float:
    """sum_k a_k values[k] over the index set; ``values`` is lag-indexed."""
    if isinstance(values, Mapping):
        missing = [int(k) for k in w.indices if int(k) not in values]
        if missing:
            raise KeyError(f"missing lags {missing}")
        v = np.array([values[int(k)] for k in w.indices], dtype=float)
    else:
        arr = np.asarray(values, dtype=float)
        if arr.size <= w.indices.max():
            raise KeyError(f"missing lags beyond {arr.size - 1}")
        v = arr[w.indices]
    return math.fsum(w.weights * v)


def constraint_residuals(w: WeightSet) -> np.ndarray:
    """Residuals of the original (unscaled) constraints, relative to their magnitude."""
    t = w.indices * w.delta
    out = []
    for j in range(w.ell + 1):
        target = 0.0 if j == 0 else j * w.x ** (j - 1)
        terms = w.weights * t**j
        out.append(abs(math.fsum(terms) - target) / max(np.abs(terms).sum(), abs(target), 1e-300))
    return np.array(out)
