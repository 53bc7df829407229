"""Two-point lower-bound construction for covariance-derivative estimation.

Builds a pair of spectral densities f0, f1 whose covariances gamma0, gamma1
are both smooth near x0 but whose derivatives at x0 differ by
a = c3 L N^-beta / (2 pi), then measures how hard the two sampled Gaussian
laws are to tell apart (KL divergence) and the resulting risk floor
(a^2 / 16) exp(-KL).

Conventions: f(w) = int gamma(t) e^{iwt} dt and
gamma(t) = (1/pi) int_0^inf f(w) cos(wt) dw.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy import integrate, special

from .gaussian import kl_toeplitz_gaussian, kl_whittle

BAND_POINTS = 4097
DENSE_KL_MAX_N = 8192

# Defaults from calibrate_constants(beta=1, L=1, K=1, x0=1, d=0.5,
# delta=1/16, T=2**12); rerun via scripts/calibrate_lower_bound.py.
DEFAULT_C0 = 0.03125
DEFAULT_C1 = 0.0078125
DEFAULT_C3 = 3.37
DEFAULT_C21 = 4.0
DEFAULT_ZETA_ORDER = 8


# ---------------------------------------------------------------- bump

def phi_hat(omega, sharpness: float = 1.0):
    """Even C-infinity plateau: 1 on [-1, 1], 0 outside [-3/2, 3/2], monotone between."""
    w = np.abs(np.asarray(omega, dtype=float))
    x = np.clip((1.5 - w) / 0.5, 0.0, 1.0)   # 0 at |w| = 3/2, 1 at |w| = 1
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(x > 0, np.exp(-sharpness / np.where(x > 0, x, 1.0)), 0.0)
        b = np.where(x < 1, np.exp(-sharpness / np.where(x < 1, 1.0 - x, 1.0)), 0.0)
    out = a / (a + b)
    return out if out.ndim else float(out)


def build_phi_hat(sharpness: float = 1.0) -> Callable:
    return lambda omega: phi_hat(omega, sharpness)


@lru_cache(maxsize=8)
def _phi_nodes(sharpness: float, points: int):
    w = np.linspace(0.0, 1.5, points)
    wt = np.full(points, w[1] - w[0])
    wt[0] *= 0.5
    wt[-1] *= 0.5
    return w, wt * phi_hat(w, sharpness)


def phi_transform(s, m: int = 0, sharpness: float = 1.0, points: int = 8193) -> np.ndarray:
    """m-th derivative of phi(s) = int phi_hat(w) e^{-iws} dw.

    This normalisation is the one under which the covariance of f0 has
    phi-part (c0/2) phi(pi t / delta). phi^(m)(s) = 2 int_0^{3/2} phi_hat(w)
    w^m cos(ws + m pi/2) dw; the trapezoid rule is spectrally accurate for
    this smooth compact integrand.
    """
    s = np.atleast_1d(np.asarray(s, dtype=float))
    w, wt = _phi_nodes(float(sharpness), points)
    out = np.empty(s.size)
    for lo in range(0, s.size, 4096):
        blk = s[lo:lo + 4096]
        out[lo:lo + 4096] = np.cos(np.outer(blk, w) + m * np.pi / 2) @ (wt * w**m) * 2.0
    return out


# ---------------------------------------------------------------- zeta

def _check_zeta(ell: int, x0: float, d: float):
    if int(ell) != ell or ell < 2 or ell % 2:
        raise ValueError("zeta order must be an even integer >= 2 (nonnegativity needs even order)")
    if not 0 < d < x0:
        raise ValueError("need 0 < d < x0")


def build_zeta_hat(ell: int, x0: float, d: float, omega):
    """[(x0-d)/ell] [2 sin(w (x0-d)/ell) / (w (x0-d)/ell)]^ell."""
    _check_zeta(ell, x0, d)
    r = (x0 - d) / ell
    w = np.asarray(omega, dtype=float)
    out = r * (2.0 * np.sinc(w * r / np.pi)) ** ell
    return out if out.ndim else float(out)


def zeta_time(ell: int, x0: float, d: float, t):
    """zeta(t) = (1_[-1,1] * ... * 1_[-1,1])(ell t / (x0 - d)), via the Irwin-Hall density."""
    _check_zeta(ell, x0, d)
    s = ell * np.asarray(t, dtype=float) / (x0 - d)
    u = np.clip((s + ell) / 2.0, 0.0, float(ell))
    dens = np.zeros_like(u)
    for k in range(ell + 1):
        dens += (-1) ** k * special.comb(ell, k) * np.maximum(u - k, 0.0) ** (ell - 1)
    dens /= math.factorial(ell - 1)
    dens = np.where(np.abs(s) < ell, dens, 0.0)
    return 2.0 ** (ell - 1) * dens


# ---------------------------------------------------------------- grids

@dataclass(frozen=True, eq=False)
class SpectralGrid:
    """Density samples on the uniform grid omega_j = (j - m/2) d_omega."""

    omega: np.ndarray
    values: np.ndarray

    @property
    def m(self) -> int:
        return self.omega.size

    @property
    def d_omega(self) -> float:
        return float(self.omega[1] - self.omega[0])

    @property
    def omega_max(self) -> float:
        return float(-self.omega[0])

    def inverse_transform(self) -> tuple[np.ndarray, np.ndarray]:
        """(t_k, gamma(t_k)) on the dual grid t_k = 2 pi k / (m d_omega)."""
        m, dw = self.m, self.d_omega
        k = np.fft.fftfreq(m, d=1.0 / m)
        t = 2 * np.pi * k / (m * dw)
        # sum_j f(w_j) e^{-i w_j t_k}, w_j = w_0 + j dw
        phase = np.exp(-1j * self.omega[0] * t)
        vals = np.fft.fft(self.values) * phase * dw / (2 * np.pi)
        order = np.argsort(t)
        return t[order], vals.real[order]

    @classmethod
    def forward_transform(cls, t: np.ndarray, gamma: np.ndarray, omega: np.ndarray) -> np.ndarray:
        """f(w) = sum_k gamma(t_k) e^{i w t_k} dt on a uniform, symmetric time grid."""
        dt = t[1] - t[0]
        return (np.cos(np.outer(omega, t)) @ gamma) * dt


def alias_density(f, delta: float, omega=None, tol: float = 1e-14, max_terms: int = 1_000_000):
    """Folded density (1/delta) sum_j f((w + 2 pi j)/delta) for w in (-pi, pi].

    ``f`` is a callable or a SpectralGrid (linearly interpolated, zero outside).
    Terms are added in |j| order until the newest pair is below ``tol`` times
    the running sum everywhere.
    """
    if isinstance(f, SpectralGrid):
        grid = f
        f = lambda w: np.interp(w, grid.omega, grid.values, left=0.0, right=0.0)  # noqa: E731
    if omega is None:
        omega = np.linspace(-np.pi, np.pi, 2049)[1:]
    omega = np.asarray(omega, dtype=float)
    total = np.asarray(f(omega / delta), dtype=float).copy()
    for j in range(1, max_terms):
        term = f((omega + 2 * np.pi * j) / delta) + f((omega - 2 * np.pi * j) / delta)
        total += term
        if np.all(np.abs(term) <= tol * np.abs(total)):
            break
    return total / delta


# ---------------------------------------------------------------- construction

@dataclass(frozen=True)
class PairParams:
    beta: float
    L: float
    K: float
    x0: float
    d: float
    delta: float
    T: float
    c0: float = DEFAULT_C0
    c1: float = DEFAULT_C1
    c3: float = DEFAULT_C3
    c21: float = DEFAULT_C21
    zeta_order: int = DEFAULT_ZETA_ORDER
    sharpness: float = 1.0
    N0: int | None = None

    @property
    def n(self) -> int:
        return int(round(self.T / self.delta))


class Construction:
    """Analytic pieces of the pair (f0, f1), evaluated on demand."""

    def __init__(self, p: PairParams):
        _check_zeta(p.zeta_order, p.x0, p.d)
        if not (p.beta > 0 and p.L > 0 and p.K > 0 and p.delta > 0 and p.T > 0):
            raise ValueError("beta, L, K, delta, T must be positive")
        if not (p.c0 > 0 and p.c1 > 0):
            raise ValueError("c0 and c1 must be positive")
        self.p = p
        self.N0 = p.N0 if p.N0 is not None else choose_n0(p.c21, p.L, p.T, p.beta, p.x0)
        self.N = 2 * np.pi / p.x0 * (self.N0 + 0.25)
        self.half_band = np.pi / (4 * p.x0)
        if (self.N + self.half_band) * p.delta > np.pi:
            raise ValueError(
                f"(N + pi/(4 x0)) delta = {(self.N + self.half_band) * p.delta:.4f} > pi; "
                "reduce c21 or delta")
        self.band = np.linspace(self.N - self.half_band, self.N + self.half_band, BAND_POINTS)
        self._band_w = np.full(BAND_POINTS, self.band[1] - self.band[0])
        self._band_w[[0, -1]] *= 0.5
        self.B = 2.0 * float(np.sum(self._band_w * self.f0(self.band) ** 2
                                    * np.sin(self.band * p.x0) ** 2 * self.band**2
                                    * self.bump(self.band)))
        self.A = p.c3 * p.L * self.N ** (-p.beta) / self.B

    # spectral side
    def zeta_hat(self, omega):
        return build_zeta_hat(self.p.zeta_order, self.p.x0, self.p.d, omega)

    def f0(self, omega):
        p = self.p
        w = np.asarray(omega, dtype=float)
        return (p.c0 * p.delta * phi_hat(w * p.delta / np.pi, p.sharpness)
                + p.c1 * (self.zeta_hat(w - self.N) + self.zeta_hat(w + self.N)))

    def bump(self, omega):
        c = 6 * self.p.x0 / np.pi
        w = np.asarray(omega, dtype=float)
        return phi_hat(c * (w - self.N), self.p.sharpness) + phi_hat(c * (w + self.N), self.p.sharpness)

    def psi(self, omega):
        w = np.asarray(omega, dtype=float)
        return self.f0(w) * w * np.sin(w * self.p.x0) * self.bump(w)

    def f1(self, omega):
        return self.f0(omega) * (1.0 + self.A * self.psi(omega))

    def perturbation(self, omega):
        """f1 - f0."""
        return self.A * self.f0(omega) * self.psi(omega)

    # time side
    def gamma0(self, t, m: int = 0):
        """m-th derivative of gamma0 (m = 0 supports all t; m > 0 only where zeta vanishes)."""
        p = self.p
        t = np.asarray(t, dtype=float)
        s = np.pi * np.abs(t) / p.delta
        sign = np.sign(t) ** m if m else 1.0
        part = 0.5 * p.c0 * (np.pi / p.delta) ** m * phi_transform(s.ravel(), m, p.sharpness).reshape(s.shape)
        if m == 0:
            part = part + 2.0 * p.c1 * zeta_time(p.zeta_order, p.x0, p.d, t) * np.cos(self.N * t)
        elif np.any(np.abs(t) < p.x0 - p.d):
            raise ValueError("derivatives of gamma0 are only provided outside supp(zeta)")
        return sign * part

    def dgamma(self, t, m: int = 0):
        """m-th derivative of gamma1 - gamma0 by quadrature over the compact band."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        w = self.band
        amp = 2.0 * self._band_w * self.perturbation(w) * w**m / (2 * np.pi)
        out = np.empty(t.size)
        for lo in range(0, t.size, 2048):
            blk = t[lo:lo + 2048]
            out[lo:lo + 2048] = np.cos(np.outer(blk, w) + m * np.pi / 2) @ amp
        return out

    def gamma1(self, t, m: int = 0):
        return self.gamma0(t, m) + self.dgamma(t, m)

    def derivative_gap_numeric(self, step: float | None = None) -> float:
        """|gamma0'(x0) - gamma1'(x0)| by central differences of gamma1 - gamma0 with one Richardson step."""
        h = 0.05 / self.N if step is None else step
        x0 = self.p.x0

        def cd(s):
            v = self.dgamma(np.array([x0 + s, x0 - s]))
            return (v[0] - v[1]) / (2 * s)

        return abs((4 * cd(h / 2) - cd(h)) / 3)

    def derivative_gap_quadrature(self) -> float:
        return abs(float(self.dgamma(np.array([self.p.x0]), m=1)[0]))

    def aliased(self, omega, which: int = 0):
        f = self.f0 if which == 0 else self.f1
        return alias_density(f, self.p.delta, omega)

    def kl_whittle(self, n: int) -> float:
        """Spectral KL of the sampled laws; the perturbation is nonzero on delta * band only."""
        p = self.p
        wd = self.band * p.delta
        g = self.perturbation(self.band) / p.delta / self.aliased(wd, 0)
        # two mirror bands contribute equally
        return 2.0 * kl_whittle(g, wd, n)


def choose_n0(c21: float, L: float, T: float, beta: float, x0: float) -> int:
    """Integer N0 >= 1 with N = (2 pi / x0)(N0 + 1/4) nearest to c21 (L^2 T)^(1/(2 beta + 2))."""
    target = c21 * (L * L * T) ** (1.0 / (2 * beta + 2))
    return max(1, int(round(target * x0 / (2 * np.pi) - 0.25)))


@dataclass(eq=False)
class CovariancePair:
    params: PairParams
    construction: Construction
    N: float
    N0: int
    B: float
    a: float
    a_numeric: float
    gamma0: np.ndarray
    gamma1: np.ndarray
    f0: SpectralGrid
    f1: SpectralGrid
    f1_min: float
    diagnostics: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.gamma0.size


def spectral_grid_size(p: PairParams, N: float, n: int = 1,
                       points_per_transition: int = 32) -> tuple[float, int, int]:
    """(omega_max, m, q) for the working FFT grid.

    omega_max = q pi / delta with q a power of two, so the dual time grid has
    spacing delta / q and every lag k delta is a grid point; m is a power of
    two large enough to resolve the bump transition with the requested number
    of points and to reach lag n delta.
    """
    x0, d, ell = p.x0, p.d, p.zeta_order
    r = (x0 - d) / ell
    # zeta_hat(w) <= r (2 / (w r))^ell, below 1e-13 of its peak r 2^ell for w > tail
    tail = 10.0 ** (13.0 / ell) / r
    need = max(2 * (N + np.pi / (4 * x0)), 1.5 * np.pi / p.delta * 1.01, N + tail)
    q = 1 << max(0, int(math.ceil(math.log2(need * p.delta / np.pi))))
    omega_max = q * np.pi / p.delta
    dw = (np.pi / (12 * x0)) / points_per_transition
    m = 1 << int(math.ceil(math.log2(max(2 * omega_max / dw, 2 * q * (n + 1)))))
    return omega_max, m, q


def _lags_from_grid(values: np.ndarray, omega0: float, dw: float, q: int, n: int) -> np.ndarray:
    """gamma(k delta), k = 0..n-1, from density samples on a grid with dual spacing delta/q."""
    m = values.size
    k = np.arange(n) * q                      # dual-grid indices of the lags
    t_scaled = 2 * np.pi * k / m              # = dw * t_k
    spec = np.fft.fft(values)[k]
    return (spec * np.exp(-1j * omega0 / dw * t_scaled)).real * dw / (2 * np.pi)


def build_pair(p: PairParams | None = None, *, n: int | None = None, **kwargs) -> CovariancePair:
    """Construct (f0, f1, gamma0, gamma1, N, a) for the given parameters.

    Raises if f1 dips below -1e-12 (only possible for negative c3) or if the
    band condition (N + pi/(4 x0)) delta <= pi fails.
    """
    if p is None:
        p = PairParams(**kwargs)
    elif kwargs:
        raise TypeError("pass either PairParams or keyword arguments")
    con = Construction(p)
    n = p.n if n is None else int(n)

    omega_max, m, q = spectral_grid_size(p, con.N, n)
    dw = 2 * omega_max / m
    omega = (np.arange(m) - m // 2) * dw
    f0_vals = con.f0(omega)
    pert = con.perturbation(omega)
    f0 = SpectralGrid(omega, f0_vals)
    f1 = SpectralGrid(omega, f0_vals + pert)
    f1_min = float(min(f1.values.min(), con.f1(con.band).min()))
    if f1_min < -1e-12:
        raise ValueError(f"positivity of f1 violated (min {f1_min:.3e}); reduce c3")

    # the difference is transformed on its own so it keeps full relative accuracy
    gamma0 = _lags_from_grid(f0_vals, omega[0], dw, q, n)
    gamma1 = gamma0 + _lags_from_grid(pert, omega[0], dw, q, n)
    a = abs(p.c3) * p.L * con.N ** (-p.beta) / (2 * np.pi)
    pair = CovariancePair(
        params=p, construction=con, N=float(con.N), N0=con.N0, B=con.B, a=a,
        a_numeric=con.derivative_gap_numeric(),
        gamma0=gamma0, gamma1=gamma1, f0=f0, f1=f1, f1_min=f1_min,
    )
    pair.diagnostics.update(
        T_delta2=p.T * p.delta**2,
        L2_T_delta_2b2=p.L**2 * p.T * p.delta ** (2 * p.beta + 2),
        band_condition=(con.N + con.half_band) * p.delta,
        a_quadrature=con.derivative_gap_quadrature(),
        f0_alias_min=float(con.aliased(np.linspace(-np.pi, np.pi, 2049)[1:], 0).min()),
    )
    return pair


def kl_pair(pair: CovariancePair, n: int | None = None, method: str = "auto") -> float:
    """KL(P_gamma1 || P_gamma0) for n samples; dense when n <= 8192 unless told otherwise."""
    n = pair.n if n is None else int(n)
    if method == "auto":
        method = "dense" if n <= DENSE_KL_MAX_N else "whittle"
    if method == "dense":
        if n > pair.n:
            raise ValueError(f"pair holds {pair.n} lags, asked for {n}")
        return kl_toeplitz_gaussian(pair.gamma0[:n], pair.gamma1[:n], n)
    if method == "whittle":
        return pair.construction.kl_whittle(n)
    raise ValueError(f"unknown KL method {method!r}")


def two_point_risk_floor(pair: CovariancePair, n: int | None = None, kl: float | None = None,
                         method: str = "auto") -> float:
    """(a^2 / 16) exp(-KL): squared-risk floor from the two hypotheses."""
    if kl is None:
        kl = kl_pair(pair, n, method)
    if not np.isfinite(kl):
        raise ValueError("KL divergence is not finite")
    return pair.a**2 / 16.0 * math.exp(-kl)


# ---------------------------------------------------------------- class checks

def holder_constant(con: Construction, which: int = 1, points: int = 401) -> float:
    """Smallest L' with |g^(l)(x) - g^(l)(y)| <= L' |x - y|^(beta + 1 - l) on I.

    l = max{k integer : k < beta + 1}; evaluated over all pairs of a uniform grid on I.
    """
    p = con.p
    ell = math.ceil(p.beta + 1) - 1
    alpha = p.beta + 1 - ell
    t = np.linspace(p.x0 - p.d, p.x0 + p.d, points)
    g = con.gamma0(t, ell) if which == 0 else con.gamma1(t, ell)
    i, j = np.triu_indices(points, k=1)
    return float(np.max(np.abs(g[i] - g[j]) / np.abs(t[i] - t[j]) ** alpha))


def l1_norm(grid: SpectralGrid) -> float:
    """int |gamma| for the covariance of a gridded density (trapezoid on the dual grid)."""
    t, g = grid.inverse_transform()
    return float(integrate.trapezoid(np.abs(g), t))


def _profiles(p: PairParams) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(t, gamma0(t), (gamma1 - gamma0)(t)) on the dual FFT grid."""
    con = Construction(p)
    omega_max, m, _ = spectral_grid_size(p, con.N)
    omega = (np.arange(m) - m // 2) * (2 * omega_max / m)
    t, g0 = SpectralGrid(omega, con.f0(omega)).inverse_transform()
    _, gd = SpectralGrid(omega, con.perturbation(omega)).inverse_transform()
    return t, g0, gd


def calibrate_constants(beta: float, L: float, K: float, x0: float, d: float, delta: float,
                        T: float, c21: float = DEFAULT_C21, c2: float = 0.5,
                        safety: float = 0.9, zeta_order: int = DEFAULT_ZETA_ORDER) -> dict:
    """Pick (c0, c1, c3) for one configuration.

    c1 spends a quarter of the L1 budget K on the zeta component
    (int |2 c1 zeta cos| <= 2 c1 zeta_hat(0)); c0 is halved from 1 until gamma0
    alone uses at most c2 L of the smoothness budget on I and half of K;
    c3 is then the largest value (times ``safety``) keeping gamma1 inside the
    class: Hoelder constant <= L on I and int |gamma1| <= K. With c3 >= 0 the
    perturbation of f0 is nonnegative, so f1 >= 0 never binds.
    """
    zeta_mass = build_zeta_hat(zeta_order, x0, d, 0.0)
    c1 = 0.25 * K / (2.0 * zeta_mass)
    c0 = 1.0
    base = dict(beta=beta, L=L, K=K, x0=x0, d=d, delta=delta, T=T, c21=c21, zeta_order=zeta_order)
    while True:
        params = PairParams(c0=c0, c1=c1, c3=1.0, **base)
        h0 = holder_constant(Construction(params), 0)
        t, g0, gd = _profiles(params)
        l1_0 = float(integrate.trapezoid(np.abs(g0), t))
        if h0 <= c2 * L and l1_0 <= 0.5 * K:
            break
        c0 *= 0.5
    unit = Construction(params)
    tt = np.linspace(x0 - d, x0 + d, 401)
    ell = math.ceil(beta + 1) - 1
    alpha = beta + 1 - ell
    dd = unit.dgamma(tt, ell)
    i, j = np.triu_indices(tt.size, k=1)
    h_unit = float(np.max(np.abs(dd[i] - dd[j]) / np.abs(tt[i] - tt[j]) ** alpha))
    c3_smooth = (L - h0) / h_unit

    def l1(c3):
        return float(integrate.trapezoid(np.abs(g0 + c3 * gd), t))

    lo, hi = 0.0, c3_smooth
    if l1(hi) > K:
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            lo, hi = (mid, hi) if l1(mid) <= K else (lo, mid)
        c3_l1 = lo
    else:
        c3_l1 = math.inf
    c3 = safety * min(c3_smooth, c3_l1)
    return {"c0": c0, "c1": float(c1), "c3": float(c3), "c21": c21,
            "holder_gamma0": h0, "l1_gamma0": l1_0,
            "c3_smooth": float(c3_smooth), "c3_l1": float(c3_l1)}
