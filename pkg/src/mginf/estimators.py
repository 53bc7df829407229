"""Estimators of G(x0), the arrival rate and the covariance derivative.

All three apply the minimum-norm derivative weights to empirical lag
covariances: G(x0) = 1 + R'(x0)/lambda, lambda = -R'(0+), theta = gamma'(x0).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from . import covest
from .dists import HolderClass
from .lpweights import WeightSet, min_feasible_h, segment, solve_weights
from .sim import GridSpec, PathRecord


class ConditionWarning(UserWarning):
    """A theorem hypothesis is not met; the estimate is still defined."""


@dataclass(frozen=True)
class EstimatorConfig:
    x0: float
    ell: int
    h: Union[float, str] = "auto"
    lam: float | None = None
    kappa: float = 0.5
    holder: HolderClass | None = None

    def __post_init__(self):
        if not 0 < self.kappa < 1:
            raise ValueError("kappa must lie in (0, 1)")
        if self.h != "auto" and not (isinstance(self.h, (int, float)) and self.h > 0):
            raise ValueError("h must be a positive number or 'auto'")
        if self.h == "auto" and self.holder is None:
            raise ValueError("auto bandwidth needs a HolderClass (beta, L, K)")


@dataclass
class EstimateResult:
    estimate: float
    h_used: float
    window: tuple[float, float]
    weights: WeightSet
    warnings: list[str] = field(default_factory=list)

    @property
    def weights_norm(self) -> float:
        return self.weights.norm2

    @property
    def clipped(self) -> float:
        return float(np.clip(self.estimate, 0.0, 1.0))

    def to_json(self) -> dict:
        return {
            "estimate": self.estimate,
            "h_used": self.h_used,
            "window": list(self.window),
            "weights_norm": self.weights_norm,
            "warnings": list(self.warnings),
        }


@dataclass
class CombinedResult:
    estimate: float
    used_trivial: bool
    trivial_bound: float
    estimator_bound: float
    detail: EstimateResult


def _moment_factor(K: float) -> float:
    return K * max(math.sqrt(K), 1.0)


def bandwidth_star(cfg: EstimatorConfig, T: float, target: str = "g") -> float:
    """Rate-optimal window width.

    target 'g':      [K (sqrt K v 1)(1 + 1/lambda) / (L^2 kappa T)]^(1/(2 beta + 2))
    target 'lambda': [K (sqrt K v 1) / (L^2 T)]^(1/(2 beta + 2))
    target 'theta':  [K / (L^2 kappa T)]^(1/(2 beta + 2))
    """
    hc = cfg.holder
    if hc is None:
        raise ValueError("bandwidth_star needs a HolderClass")
    beta, L, K = hc.beta, hc.L, hc.K
    if target == "g":
        lam = math.inf if cfg.lam is None else cfg.lam
        if not lam > 0:
            raise ValueError("lambda must be positive")
        num = _moment_factor(K) * (1.0 + 1.0 / lam)
        den = L * L * cfg.kappa * T
    elif target == "lambda":
        num, den = _moment_factor(K), L * L * T
    elif target == "theta":
        num, den = K, L * L * cfg.kappa * T
    else:
        raise ValueError(f"unknown target {target!r}")
    return (num / den) ** (1.0 / (2 * beta + 2))


def bias_bound(cfg: EstimatorConfig, h: float, lam: float, c2: float = 1.0) -> float:
    """C2 lambda L h^beta; bounds |sum a_k R_k - R'(x0)|."""
    hc = cfg.holder
    return c2 * lam * hc.L * h**hc.beta


def risk_bound_g(cfg: EstimatorConfig, T: float, C: float = 1.0) -> float:
    """C L^(1/(beta+1)) [K (sqrt K v 1)(1 + 1/lambda) / (kappa T)]^(beta/(2 beta + 2))."""
    hc = cfg.holder
    b = hc.beta
    return C * hc.L ** (1 / (b + 1)) * (
        _moment_factor(hc.K) * (1 + 1 / cfg.lam) / (cfg.kappa * T)) ** (b / (2 * b + 2))


def risk_bound_lambda(cfg: EstimatorConfig, lam: float, T: float, C: float = 1.0) -> float:
    hc = cfg.holder
    b = hc.beta
    return C * hc.L ** (1 / (b + 1)) * math.sqrt(lam * lam + lam) * (
        _moment_factor(hc.K) / T) ** (b / (2 * b + 2))


def risk_bound_theta(cfg: EstimatorConfig, T: float, C: float = 1.0) -> float:
    hc = cfg.holder
    b = hc.beta
    return C * hc.L ** (1 / (b + 1)) * (hc.K / (cfg.kappa * T)) ** (b / (2 * b + 2))


def trivial_bound(cfg: EstimatorConfig) -> float:
    """K x0^-2, the risk of always answering G(x0) = 1."""
    if cfg.x0 == 0:
        return math.inf
    return cfg.holder.K / cfg.x0**2


def _resolve_h(cfg: EstimatorConfig, grid: GridSpec, target: str) -> float:
    if cfg.h == "auto":
        return bandwidth_star(cfg, grid.T, target)
    return float(cfg.h)


def _conditions(cfg: EstimatorConfig, grid: GridSpec, h: float, target: str) -> list[str]:
    msgs = []
    hc = cfg.holder
    if h < min_feasible_h(cfg.ell, grid.delta) * (1 - 1e-12):
        msgs.append(f"h={h:.6g} < (ell+2) delta/2 = {min_feasible_h(cfg.ell, grid.delta):.6g}")
    if hc is None:
        return msgs
    if cfg.h == "auto" and cfg.ell < hc.floor_beta + 1:
        msgs.append(f"ell={cfg.ell} < floor(beta)+1 = {hc.floor_beta + 1}")
    b, L, K, d = hc.beta, hc.L, hc.K, hc.d
    if target == "g":
        c = _moment_factor(K) * (1 + 1 / cfg.lam) / (L * L * cfg.kappa)
    elif target == "lambda":
        c = _moment_factor(K) / (L * L)
    else:
        c = K / (L * L * cfg.kappa)
    lower = c * d ** (-2 * b - 2)
    upper = c * (2 / ((cfg.ell + 2) * grid.delta)) ** (2 * b + 2)
    if not lower <= grid.T:
        msgs.append(f"T={grid.T:g} below the lower horizon condition {lower:.6g}")
    if not grid.T <= upper:
        msgs.append(f"T={grid.T:g} above the upper horizon condition {upper:.6g}")
    if target != "lambda" and hc.interval[1] > (1 - cfg.kappa) * grid.T:
        msgs.append(f"interval {hc.interval} not inside [0, (1-kappa) T]")
    return msgs


def _weights(x: float, h: float, grid: GridSpec, ell: int) -> WeightSet:
    return solve_weights(x, segment(x, h, grid.T, grid.delta), grid, ell)


def _derivative(samples, cfg: EstimatorConfig, grid: GridSpec, x: float, target: str,
                centered: bool) -> tuple[float, float, WeightSet, list[str]]:
    samples = np.asarray(samples)
    if samples.size != grid.n:
        raise ValueError(f"expected {grid.n} samples, got {samples.size}")
    h = _resolve_h(cfg, grid, target)
    w = _weights(x, h, grid, cfg.ell)
    msgs = _conditions(cfg, grid, h, target)
    if x > grid.T - grid.delta - h:
        msgs.append("x0 in the terminal band: only delta-many products per lag")
    for m in msgs:
        warnings.warn(m, ConditionWarning, stacklevel=3)
    r = covest.r_hat_lags(samples, w.indices, centered=centered)
    return math.fsum(w.weights * r), h, w, msgs


def estimate_g(samples, cfg: EstimatorConfig, grid: GridSpec) -> EstimateResult:
    """G_hat(x0) = 1 + (1/lambda) sum_k a_k(x0) R_hat_k (unclipped)."""
    if cfg.lam is None or not cfg.lam > 0:
        raise ValueError("estimate_g needs the known arrival rate lambda > 0")
    deriv, h, w, msgs = _derivative(samples, cfg, grid, cfg.x0, "g", centered=True)
    return EstimateResult(1.0 + deriv / cfg.lam, h, w.segment, w, msgs)


def estimate_g_combined(samples, cfg: EstimatorConfig, grid: GridSpec,
                        C: float = 1.0) -> CombinedResult:
    """Switch to the trivial answer 1 when K x0^-2 beats the estimator's risk bound."""
    triv = trivial_bound(cfg)
    est_bound = risk_bound_g(cfg, grid.T, C)
    detail = estimate_g(samples, cfg, grid)
    if triv < est_bound:
        return CombinedResult(1.0, True, triv, est_bound, detail)
    return CombinedResult(detail.estimate, False, triv, est_bound, detail)


def estimate_lambda(samples, cfg: EstimatorConfig, grid: GridSpec) -> EstimateResult:
    """lambda_hat = -sum_{k in M_{D_0}} a_k(0) R_hat_k with D_0 = [0, 2h]."""
    deriv, h, w, msgs = _derivative(samples, cfg, grid, 0.0, "lambda", centered=True)
    return EstimateResult(-deriv, h, w.segment, w, msgs)


def estimate_lambda_counting(path: PathRecord) -> tuple[float, float]:
    """(#up-jumps / T, #down-jumps / T) from the continuous-time event stream."""
    T = path.horizon
    inside = (path.event_times > 0) & (path.event_times <= T)
    kinds = path.event_kinds[inside]
    return float(np.count_nonzero(kinds > 0)) / T, float(np.count_nonzero(kinds < 0)) / T


def estimate_theta(samples, cfg: EstimatorConfig, grid: GridSpec) -> EstimateResult:
    """theta_hat = sum_k a_k(x0) R_tilde_k with uncentred products (zero-mean data)."""
    if not 0 < cfg.x0 <= grid.T - grid.delta:
        raise ValueError(f"x0={cfg.x0} outside (0, T - delta]")
    deriv, h, w, msgs = _derivative(samples, cfg, grid, cfg.x0, "theta", centered=False)
    return EstimateResult(deriv, h, w.segment, w, msgs)


def apply_to_covariances(r_values, cfg: EstimatorConfig, grid: GridSpec, x: float,
                         target: str = "g") -> float:
    """The weighted sum of supplied lag covariances (``r_values[k]`` for lag k).

    Deterministic companion of the estimators, for plugging in exact covariances.
    """
    h = _resolve_h(cfg, grid, target)
    w = _weights(x, h, grid, cfg.ell)
    return math.fsum(w.weights * np.asarray(r_values, dtype=float)[w.indices])
