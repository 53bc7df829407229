"""Stationary Gaussian sequences: exact sampling and Toeplitz KL divergence."""
from __future__ import annotations

import warnings

import numpy as np
from scipy import integrate, linalg

from .rng import as_generator

JITTER_MAX = 1e-10


class EmbeddingWarning(UserWarning):
    pass


def circulant_eigenvalues(gamma) -> np.ndarray:
    """Eigenvalues of the minimal circulant embedding of T_n(gamma)."""
    g = np.asarray(gamma, dtype=float)
    row = np.concatenate([g, g[-2:0:-1]])
    return np.fft.fft(row).real


def sample_stationary_gaussian(gamma, n: int | None = None, seed=None, size: int | None = None,
                               tol: float = 1e-10) -> np.ndarray:
    """Exact draw(s) from N(0, T_n(gamma)) via circulant embedding.

    Falls back to a dense Cholesky factor (with jitter at most 1e-10 * gamma[0])
    when the embedding has negative eigenvalues. Returns shape (n,) or (size, n).
    """
    g = np.asarray(gamma, dtype=float)
    n = g.size if n is None else int(n)
    if g.size < n:
        raise ValueError(f"need {n} covariance lags, got {g.size}")
    g = g[:n]
    rng = as_generator(seed)
    reps = 1 if size is None else int(size)

    if n == 1:
        if g[0] < 0:
            raise ValueError("negative variance")
        out = np.sqrt(g[0]) * rng.standard_normal((reps, 1))
        return out[0] if size is None else out

    lam = circulant_eigenvalues(g)
    if lam.min() >= -tol * max(lam.max(), 1e-300):
        m = lam.size
        scale = np.sqrt(np.maximum(lam, 0.0) / m)
        z = rng.standard_normal((reps, m)) + 1j * rng.standard_normal((reps, m))
        out = np.fft.fft(scale * z, axis=1).real[:, :n]
    else:
        warnings.warn("circulant embedding is not nonnegative definite; using Cholesky",
                      EmbeddingWarning, stacklevel=2)
        out = rng.standard_normal((reps, n)) @ _cholesky_jitter(linalg.toeplitz(g)).T
    return out[0] if size is None else out


def _cholesky_jitter(S: np.ndarray) -> np.ndarray:
    top = float(np.max(np.diag(S)))
    for jitter in (0.0, 1e-14, 1e-12, JITTER_MAX):
        try:
            return linalg.cholesky(S + jitter * top * np.eye(S.shape[0]), lower=True)
        except linalg.LinAlgError:
            continue
    raise ValueError("covariance is not positive semidefinite beyond the allowed jitter")


def kl_toeplitz_gaussian(gamma0, gamma1, n: int | None = None) -> float:
    """KL = E_1 log(dP_1/dP_0) for zero-mean N(0, T_n(gamma_i)).

    Equals 1/2 [log det(S0/S1) - n + tr(S0^-1 S1)]. Evaluated as
    1/2 sum (mu - log(1 + mu)) over the eigenvalues mu of L^-1 (S1 - S0) L^-T,
    S0 = L L^T, which keeps full relative accuracy when S1 is close to S0.
    """
    g0 = np.asarray(gamma0, dtype=float)
    g1 = np.asarray(gamma1, dtype=float)
    n = min(g0.size, g1.size) if n is None else int(n)
    S0 = linalg.toeplitz(g0[:n])
    D = linalg.toeplitz(g1[:n]) - S0
    try:
        L = linalg.cholesky(S0, lower=True)
    except linalg.LinAlgError as exc:
        raise ValueError("Sigma_0 is singular or indefinite") from exc
    E = linalg.solve_triangular(L, D, lower=True)
    E = linalg.solve_triangular(L, E.T, lower=True)
    E = 0.5 * (E + E.T)
    mu = linalg.eigvalsh(E)
    if mu.min() <= -1.0 + 1e-12:
        raise ValueError("Sigma_1 is singular or indefinite")
    return float(0.5 * np.sum(mu - np.log1p(mu)))


def kl_whittle(ratio_minus_one, omega, n: int) -> float:
    """Spectral approximation (n / 4 pi) int [g - log(1 + g)] d omega, g = f1/f0 - 1.

    ``omega`` is a uniform grid covering the support of g inside (-pi, pi].
    """
    g = np.asarray(ratio_minus_one, dtype=float)
    integrand = g - np.log1p(g)
    return float(n / (4 * np.pi) * integrate.trapezoid(integrand, omega))
