"""Exact stationary simulation of the M/G/infinity queue-length process.

The queue starts in steady state: the number of customers in service at time 0
is Poisson(rho), each with an equilibrium residual service time, and fresh
arrivals on (0, T] form a Poisson(lambda) process with i.i.d. service times.
No burn-in is needed.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dists import ServiceDist
from .rng import as_generator, substream

ARRIVAL = 1
DEPARTURE = -1


@dataclass(frozen=True)
class GridSpec:
    """Observation design t_i = i * delta, i = 1..n."""

    delta: float
    n: int

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        if int(self.n) != self.n or self.n < 1:
            raise ValueError("n must be a positive integer")
        object.__setattr__(self, "n", int(self.n))

    @property
    def T(self) -> float:
        return self.n * self.delta

    @property
    def times(self) -> np.ndarray:
        return self.delta * np.arange(1, self.n + 1)

    @classmethod
    def from_horizon(cls, delta: float, T: float) -> "GridSpec":
        n = round(T / delta)
        if abs(n * delta - T) > 1e-9 * max(T, 1.0):
            raise ValueError(f"T={T} is not a multiple of delta={delta}")
        return cls(delta, n)


@dataclass(frozen=True, eq=False)
class PathRecord:
    """One realization: the merged event stream on (0, T] and the grid samples."""

    event_times: np.ndarray
    event_kinds: np.ndarray
    initial_count: int
    samples: np.ndarray
    grid: GridSpec

    @property
    def horizon(self) -> float:
        return self.grid.T

    @property
    def arrivals(self) -> np.ndarray:
        return self.event_times[self.event_kinds == ARRIVAL]

    @property
    def departures(self) -> np.ndarray:
        return self.event_times[self.event_kinds == DEPARTURE]

    def count_at(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        up = np.searchsorted(self.arrivals, t, side="right")
        down = np.searchsorted(self.departures, t, side="right")
        return self.initial_count + up - down


def _check_inputs(d: ServiceDist, lam: float):
    if not lam > 0:
        raise ValueError("arrival rate must be positive")
    if not np.isfinite(d.mean()):
        raise ValueError("mean service time infinite")


def simulate(d: ServiceDist, lam: float, grid: GridSpec, seed) -> PathRecord:
    """Draw one stationary path and sample it on ``grid``; deterministic in ``seed``."""
    _check_inputs(d, lam)
    rng = as_generator(seed)
    T = grid.T
    rho = lam * d.mean()

    n0 = int(rng.poisson(rho))
    residual = d.sample_residual(rng, n0)
    m = int(rng.poisson(lam * T))
    arrivals = np.sort(rng.uniform(0.0, T, m))
    ends = arrivals + d.sample(rng, m)

    departures = np.concatenate([residual[residual <= T], ends[ends <= T]])
    times = np.concatenate([arrivals, departures])
    kinds = np.concatenate([np.full(m, ARRIVAL, np.int8), np.full(departures.size, DEPARTURE, np.int8)])
    order = np.argsort(times, kind="stable")
    times, kinds = times[order], kinds[order]

    t = grid.times
    up = np.searchsorted(arrivals, t, side="right")
    down = np.searchsorted(np.sort(departures), t, side="right")
    samples = (n0 + up - down).astype(np.int64)
    return PathRecord(times, kinds, n0, samples, grid)


def resample(path: PathRecord, grid: GridSpec) -> np.ndarray:
    """Re-read the count process of ``path`` on another grid."""
    if grid.T > path.horizon * (1 + 1e-12):
        raise ValueError(f"grid horizon {grid.T} extends past the event horizon {path.horizon}")
    return path.count_at(grid.times).astype(np.int64)


def simulate_samples(d: ServiceDist, lam: float, grid: GridSpec, rng: np.random.Generator,
                     size: int) -> np.ndarray:
    """Vectorized draw of ``size`` independent sample vectors, shape (size, n).

    Customers of all replicates are pooled and each one adds +1 on the grid
    points inside its sojourn [start, end).
    """
    _check_inputs(d, lam)
    n, T = grid.n, grid.T
    tgrid = grid.times
    rho = lam * d.mean()

    n0 = rng.poisson(rho, size)
    m = rng.poisson(lam * T, size)
    residual = d.sample_residual(rng, int(n0.sum()))
    n_fresh = int(m.sum())
    arrivals = rng.uniform(0.0, T, n_fresh)
    ends = arrivals + d.sample(rng, n_fresh)

    rep = np.concatenate([np.repeat(np.arange(size), n0), np.repeat(np.arange(size), m)])
    start_idx = np.concatenate([np.zeros(n0.sum(), np.int64),
                                np.searchsorted(tgrid, arrivals, side="left")])
    stop_idx = np.searchsorted(tgrid, np.concatenate([residual, ends]), side="left")

    width = n + 1
    diff = np.bincount(rep * width + start_idx, minlength=size * width)
    diff -= np.bincount(rep * width + stop_idx, minlength=size * width)
    return np.cumsum(diff.reshape(size, width), axis=1)[:, :n]


def simulate_batch(d: ServiceDist, lam: float, grid: GridSpec, seed: int, replicates: int,
                   chunk: int = 50_000) -> np.ndarray:
    """``replicates`` sample vectors; chunk ``c`` draws from stream (seed, c)."""
    out = np.empty((replicates, grid.n), dtype=np.int64)
    for c, lo in enumerate(range(0, replicates, chunk)):
        hi = min(lo + chunk, replicates)
        out[lo:hi] = simulate_samples(d, lam, grid, substream(seed, c), hi - lo)
    return out
