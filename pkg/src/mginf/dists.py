"""Parametric service-time laws for the M/G/infinity queue.

Every family exposes the distribution function ``G``, the stationary-excess
tail ``H(t) = mu * int_t^inf [1 - G(x)] dx`` (the correlation function of the
queue-length process), the first two moments, and exact samplers for both the
service time and the equilibrium residual service time.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np
from scipy import special, stats


@dataclass(frozen=True)
class HolderClass:
    """Declared smoothness/moment labels attached to a service law.

    ``beta`` and ``L`` are experiment labels; only ``K`` is checked against
    the attached family (``K >= E[sigma^2]``).
    """

    beta: float
    L: float
    interval: tuple[float, float]
    K: float

    def __post_init__(self):
        lo, hi = self.interval
        if not (self.beta > 0 and self.L > 0 and self.K > 0):
            raise ValueError("beta, L and K must be positive")
        if not lo < hi:
            raise ValueError(f"empty interval [{lo}, {hi}]")

    @property
    def floor_beta(self) -> int:
        """Largest integer strictly less than beta."""
        return math.ceil(self.beta) - 1

    @property
    def d(self) -> float:
        """Half-width of the interval."""
        return 0.5 * (self.interval[1] - self.interval[0])


@dataclass(frozen=True)
class ServiceDist:
    """Base class; concrete families override the analytic hooks."""

    holder: HolderClass | None = field(default=None, kw_only=True, compare=False)

    family = "abstract"

    def __post_init__(self):
        self._validate()
        m = self.mean()
        if not (np.isfinite(m) and m > 0):
            raise ValueError("mean service time infinite")
        if self.holder is not None and self.holder.K < self.second_moment() * (1 - 1e-12):
            raise ValueError(
                f"moment bound K={self.holder.K} is below E[sigma^2]={self.second_moment():.6g}"
            )

    # -- family hooks --------------------------------------------------
    def _validate(self) -> None:
        pass

    def cdf(self, t):
        raise NotImplementedError

    def integrated_tail(self, t):
        """int_t^inf [1 - G(x)] dx for t >= 0."""
        raise NotImplementedError

    def mean(self) -> float:
        raise NotImplementedError

    def second_moment(self) -> float:
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        raise NotImplementedError

    def sample_length_biased(self, rng: np.random.Generator, size) -> np.ndarray:
        """Draw from the size-biased law x dG(x) / E[sigma]."""
        raise NotImplementedError

    # -- derived quantities --------------------------------------------
    @property
    def rate(self) -> float:
        """Service rate mu = 1 / E[sigma]."""
        return 1.0 / self.mean()

    def sf(self, t):
        return 1.0 - self.cdf(t)

    def correlation_h(self, t):
        t = np.abs(np.asarray(t, dtype=float))
        out = self.integrated_tail(t) / self.mean()
        return out if out.ndim else float(out)

    def sample_residual(self, rng: np.random.Generator, size) -> np.ndarray:
        # equilibrium residual = U * (size-biased total); exact for every family
        return rng.uniform(size=size) * self.sample_length_biased(rng, size)

    def to_config(self) -> dict[str, Any]:
        raise NotImplementedError


@dataclass(frozen=True)
class Exponential(ServiceDist):
    rate_param: float = 1.0

    family = "exponential"

    def _validate(self):
        if not self.rate_param > 0:
            raise ValueError("rate must be positive")

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        out = np.where(t < 0, 0.0, -np.expm1(-self.rate_param * np.maximum(t, 0.0)))
        return out if out.ndim else float(out)

    def integrated_tail(self, t):
        return np.exp(-self.rate_param * t) / self.rate_param

    def mean(self):
        return 1.0 / self.rate_param

    def second_moment(self):
        return 2.0 / self.rate_param**2

    def sample(self, rng, size):
        return rng.exponential(1.0 / self.rate_param, size)

    def sample_length_biased(self, rng, size):
        return rng.gamma(2.0, 1.0 / self.rate_param, size)

    def sample_residual(self, rng, size):
        return rng.exponential(1.0 / self.rate_param, size)

    def to_config(self):
        return {"family": self.family, "rate": self.rate_param}


@dataclass(frozen=True)
class Gamma(ServiceDist):
    shape: float = 1.0
    rate_param: float = 1.0

    family = "gamma"

    def _validate(self):
        if not (self.shape > 0 and self.rate_param > 0):
            raise ValueError("shape and rate must be positive")

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        out = special.gammainc(self.shape, self.rate_param * np.maximum(t, 0.0))
        return out if out.ndim else float(out)

    def integrated_tail(self, t):
        # int_t^inf Q(k, r x) dx = (k/r) Q(k+1, r t) - t Q(k, r t)
        k, r = self.shape, self.rate_param
        return (k / r) * special.gammaincc(k + 1, r * t) - t * special.gammaincc(k, r * t)

    def mean(self):
        return self.shape / self.rate_param

    def second_moment(self):
        return self.shape * (self.shape + 1) / self.rate_param**2

    def sample(self, rng, size):
        return rng.gamma(self.shape, 1.0 / self.rate_param, size)

    def sample_length_biased(self, rng, size):
        return rng.gamma(self.shape + 1.0, 1.0 / self.rate_param, size)

    def to_config(self):
        return {"family": self.family, "shape": self.shape, "rate": self.rate_param}


@dataclass(frozen=True)
class Weibull(ServiceDist):
    shape: float = 1.0
    scale: float = 1.0

    family = "weibull"

    def _validate(self):
        if not (self.shape > 0 and self.scale > 0):
            raise ValueError("shape and scale must be positive")

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        out = -np.expm1(-((np.maximum(t, 0.0) / self.scale) ** self.shape))
        return out if out.ndim else float(out)

    def integrated_tail(self, t):
        c, s = self.shape, self.scale
        return self.mean() * special.gammaincc(1.0 / c, (t / s) ** c)

    def mean(self):
        return self.scale * math.gamma(1.0 + 1.0 / self.shape)

    def second_moment(self):
        return self.scale**2 * math.gamma(1.0 + 2.0 / self.shape)

    def sample(self, rng, size):
        return self.scale * rng.weibull(self.shape, size)

    def sample_length_biased(self, rng, size):
        # (x/s)^c ~ Gamma(1 + 1/c) under size biasing
        y = rng.gamma(1.0 + 1.0 / self.shape, 1.0, size)
        return self.scale * y ** (1.0 / self.shape)

    def to_config(self):
        return {"family": self.family, "shape": self.shape, "scale": self.scale}


@dataclass(frozen=True)
class Uniform(ServiceDist):
    a: float = 0.0
    b: float = 1.0

    family = "uniform"

    def _validate(self):
        if not (0 <= self.a < self.b):
            raise ValueError("need 0 <= a < b")

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        out = np.clip((t - self.a) / (self.b - self.a), 0.0, 1.0)
        return out if out.ndim else float(out)

    def integrated_tail(self, t):
        a, b = self.a, self.b
        inside = (b - np.clip(t, a, b)) ** 2 / (2 * (b - a))
        return np.where(t < a, (a - t) + 0.5 * (b - a), inside)

    def mean(self):
        return 0.5 * (self.a + self.b)

    def second_moment(self):
        a, b = self.a, self.b
        return (a * a + a * b + b * b) / 3.0

    def sample(self, rng, size):
        return rng.uniform(self.a, self.b, size)

    def sample_length_biased(self, rng, size):
        u = rng.uniform(size=size)
        return np.sqrt(self.a**2 + u * (self.b**2 - self.a**2))

    def to_config(self):
        return {"family": self.family, "a": self.a, "b": self.b}


@dataclass(frozen=True)
class LogNormal(ServiceDist):
    mu: float = 0.0
    sigma: float = 1.0

    family = "lognormal"

    def _validate(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore"):
            z = (np.log(np.maximum(t, 0.0)) - self.mu) / self.sigma
        out = special.ndtr(z)
        return out if out.ndim else float(out)

    def integrated_tail(self, t):
        # E[(sigma - t)^+]
        with np.errstate(divide="ignore"):
            z = (np.log(t) - self.mu) / self.sigma
        return self.mean() * special.ndtr(self.sigma - z) - t * special.ndtr(-z)

    def mean(self):
        return math.exp(self.mu + 0.5 * self.sigma**2)

    def second_moment(self):
        return math.exp(2 * self.mu + 2 * self.sigma**2)

    def sample(self, rng, size):
        return rng.lognormal(self.mu, self.sigma, size)

    def sample_length_biased(self, rng, size):
        return rng.lognormal(self.mu + self.sigma**2, self.sigma, size)

    def to_config(self):
        return {"family": self.family, "mu": self.mu, "sigma": self.sigma}


@dataclass(frozen=True)
class DiracMixture(ServiceDist):
    atoms: tuple[float, ...] = (1.0,)
    weights: tuple[float, ...] = (1.0,)

    family = "dirac"

    def __post_init__(self):
        object.__setattr__(self, "atoms", tuple(float(x) for x in self.atoms))
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        super().__post_init__()

    def _validate(self):
        if len(self.atoms) != len(self.weights) or not self.atoms:
            raise ValueError("atoms and weights must be nonempty and of equal length")
        if min(self.atoms) <= 0:
            raise ValueError("service times must be positive")
        if min(self.weights) < 0 or abs(math.fsum(self.weights) - 1.0) > 1e-12:
            raise ValueError("weights must be nonnegative and sum to 1")

    def _arrays(self):
        return np.asarray(self.atoms), np.asarray(self.weights)

    def cdf(self, t):
        x, w = self._arrays()
        t = np.asarray(t, dtype=float)
        out = (w * (x <= t[..., None])).sum(axis=-1)
        return out if out.ndim else float(out)

    def integrated_tail(self, t):
        x, w = self._arrays()
        t = np.asarray(t, dtype=float)
        return (w * np.maximum(x - t[..., None], 0.0)).sum(axis=-1)

    def mean(self):
        x, w = self._arrays()
        return float(x @ w)

    def second_moment(self):
        x, w = self._arrays()
        return float((x * x) @ w)

    def sample(self, rng, size):
        x, w = self._arrays()
        return x[rng.choice(len(x), size=size, p=w)]

    def sample_length_biased(self, rng, size):
        x, w = self._arrays()
        p = x * w / (x @ w)
        return x[rng.choice(len(x), size=size, p=p)]

    def to_config(self):
        return {"family": self.family, "atoms": list(self.atoms), "weights": list(self.weights)}


def cdf(d: ServiceDist, t):
    """G(t); zero for t < 0 and right-continuous."""
    return d.cdf(t)


def correlation_h(d: ServiceDist, t):
    """H(t) = mu int_{|t|}^inf [1 - G(x)] dx, extended evenly to t < 0."""
    return d.correlation_h(t)


def second_moment(d: ServiceDist) -> float:
    """E[sigma^2] = int_0^inf 2x [1 - G(x)] dx."""
    return d.second_moment()


def h_sequence(d: ServiceDist, delta: float, n: int) -> np.ndarray:
    """H(k delta) for k = 0..n-1."""
    return np.asarray(d.correlation_h(delta * np.arange(n)), dtype=float)


_FAMILIES = {
    "exponential": (Exponential, {"rate": "rate_param"}),
    "gamma": (Gamma, {"shape": "shape", "rate": "rate_param"}),
    "weibull": (Weibull, {"shape": "shape", "scale": "scale"}),
    "uniform": (Uniform, {"a": "a", "b": "b"}),
    "lognormal": (LogNormal, {"mu": "mu", "sigma": "sigma"}),
    "dirac": (DiracMixture, {"atoms": "atoms", "weights": "weights"}),
}


def from_config(cfg: Mapping[str, Any]) -> ServiceDist:
    """Build a service law from a ``family = "...", <param> = ...`` group.

    Keys per family: exponential(rate); gamma(shape, rate);
    weibull(shape, scale); uniform(a, b); lognormal(mu, sigma);
    dirac(atoms, weights). An optional ``holder`` sub-table carries
    ``beta, L, K, interval = [lo, hi]``.
    """
    cfg = dict(cfg)
    family = str(cfg.pop("family", "")).lower()
    if family not in _FAMILIES:
        raise ValueError(f"unknown service family {family!r}; expected one of {sorted(_FAMILIES)}")
    cls, keys = _FAMILIES[family]
    holder_cfg = cfg.pop("holder", None)
    unknown = set(cfg) - set(keys)
    if unknown:
        raise ValueError(f"unexpected keys for {family}: {sorted(unknown)}")
    kwargs = {keys[k]: (tuple(v) if isinstance(v, list) else v) for k, v in cfg.items()}
    if holder_cfg is not None:
        kwargs["holder"] = HolderClass(
            beta=holder_cfg["beta"], L=holder_cfg["L"], K=holder_cfg["K"],
            interval=tuple(holder_cfg["interval"]),
        )
    return cls(**kwargs)


def residual_cdf(d: ServiceDist, t):
    """Stationary-excess distribution G* = 1 - H."""
    return 1.0 - d.correlation_h(t)


def quad_correlation_h(d: ServiceDist, t: float) -> float:
    """Independent quadrature route for H(t), used by tests and diagnostics."""
    from scipy import integrate

    t = abs(float(t))
    upper = _upper_quantile(d, 1e-12)
    if t >= upper:
        return 0.0
    breaks = [b for b in _breakpoints(d) if t < b < upper]
    val, _ = integrate.quad(lambda x: 1.0 - float(d.cdf(x)), t, upper, epsabs=1e-12,
                            epsrel=1e-12, limit=500, points=breaks or None)
    return val / d.mean()


def _breakpoints(d: ServiceDist) -> list[float]:
    if isinstance(d, DiracMixture):
        return sorted(d.atoms)
    if isinstance(d, Uniform):
        return [d.a, d.b]
    return []


def _upper_quantile(d: ServiceDist, eps: float) -> float:
    if isinstance(d, DiracMixture):
        return max(d.atoms)
    if isinstance(d, Uniform):
        return d.b
    if isinstance(d, Exponential):
        return stats.expon.isf(eps, scale=d.mean()) * 4
    if isinstance(d, Gamma):
        return stats.gamma.isf(eps, d.shape, scale=1 / d.rate_param) * 4
    if isinstance(d, Weibull):
        return stats.weibull_min.isf(eps, d.shape, scale=d.scale) * 4
    if isinstance(d, LogNormal):
        return stats.lognorm.isf(eps, d.sigma, scale=math.exp(d.mu)) * 4
    raise TypeError(type(d))
