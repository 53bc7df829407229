"""Monte Carlo risk experiments and the oracle self-check suite.

A risk experiment runs a ladder of horizons T, simulates ``replicates``
independent sample paths per rung, applies one estimator and reports the
root-mean-squared error against the analytic truth, plus a least-squares
slope of log RMSE against log T.

Replicate ``i`` of rung ``r`` draws from the stream (seed, r, i), so the
report does not depend on evaluation order.
"""
from __future__ import annotations

import csv
import json
import math
import os
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Callable, Mapping

import numpy as np
from scipy import linalg, stats

from . import dists, moments
from .dists import HolderClass, ServiceDist
from .estimators import (
    ConditionWarning,
    EstimatorConfig,
    estimate_g,
    estimate_lambda,
    estimate_lambda_counting,
    estimate_theta,
    risk_bound_g,
    risk_bound_lambda,
    risk_bound_theta,
)
from .gaussian import sample_stationary_gaussian
from .rng import substream
from .sim import GridSpec, simulate, simulate_batch, simulate_samples

OUTPUT_ENV = "MGINF_OUTPUT_DIR"
CSV_HEADER = ("t", "delta", "h", "rmse", "se", "bound")
TARGETS = ("g", "lambda", "lambda_up", "lambda_down", "theta")
MAX_FAILURE_FRACTION = 0.01


# ---------------------------------------------------------------- covariance families

@dataclass(frozen=True)
class ExpCovariance:
    """gamma(t) = variance * exp(-|t| / scale)."""

    variance: float = 1.0
    scale: float = 1.0

    def __call__(self, t):
        return self.variance * np.exp(-np.abs(np.asarray(t, dtype=float)) / self.scale)

    def derivative(self, t: float) -> float:
        if t <= 0:
            raise ValueError("derivative is taken at t > 0")
        return -self.variance / self.scale * math.exp(-t / self.scale)


@dataclass(frozen=True)
class GaussCovariance:
    """gamma(t) = variance * exp(-t^2 / (2 scale^2))."""

    variance: float = 1.0
    scale: float = 1.0

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return self.variance * np.exp(-0.5 * (t / self.scale) ** 2)

    def derivative(self, t: float) -> float:
        return -self.variance * t / self.scale**2 * math.exp(-0.5 * (t / self.scale) ** 2)


_COVARIANCES = {"exponential": ExpCovariance, "gauss": GaussCovariance}


def covariance_from_config(cfg: Mapping[str, Any]):
    cfg = dict(cfg)
    family = str(cfg.pop("family", "exponential")).lower()
    if family not in _COVARIANCES:
        raise ValueError(f"unknown covariance family {family!r}; expected one of {sorted(_COVARIANCES)}")
    return _COVARIANCES[family](**cfg)


# ---------------------------------------------------------------- spec and report

@dataclass
class ExperimentSpec:
    target: str
    ladder: list[tuple[float, int]]
    replicates: int
    estimator: EstimatorConfig | None = None
    dist: ServiceDist | None = None
    lam: float | None = None
    covariance: Any = None
    seed: int = 0
    output: str | None = None
    bound_constant: float = 1.0

    def __post_init__(self):
        if self.target not in TARGETS:
            raise ValueError(f"target must be one of {TARGETS}, got {self.target!r}")
        if self.replicates < 2:
            raise ValueError("replicates must be >= 2")
        if not self.ladder:
            raise ValueError("ladder must be nonempty")
        self.ladder = [(float(d), int(n)) for d, n in self.ladder]
        if self.target == "theta":
            if self.covariance is None:
                raise ValueError("theta experiments need a covariance family")
        else:
            if self.dist is None or self.lam is None:
                raise ValueError("queue experiments need a service law and an arrival rate")
        if self.target in ("g", "lambda", "theta") and self.estimator is None:
            raise ValueError(f"target {self.target!r} needs an estimator config")

    @classmethod
    def from_config(cls, cfg: Mapping[str, Any]) -> "ExperimentSpec":
        """Build from a parsed TOML mapping (schema in README)."""
        cfg = dict(cfg)
        lad = cfg["ladder"]
        delta = float(lad["delta"])
        if "T" in lad:
            ladder = [(delta, int(round(T / delta))) for T in lad["T"]]
        else:
            ladder = [(delta, int(n)) for n in lad["n"]]
        dist = dists.from_config(cfg["service"]) if "service" in cfg else None
        holder = None
        if "holder" in cfg:
            h = cfg["holder"]
            holder = HolderClass(beta=h["beta"], L=h["L"], K=h["K"], interval=tuple(h["interval"]))
        elif dist is not None:
            holder = dist.holder
        lam = cfg.get("lambda")
        est = None
        if "estimator" in cfg:
            e = dict(cfg["estimator"])
            est = EstimatorConfig(x0=float(e.get("x0", 0.0)), ell=int(e["ell"]), h=e.get("h", "auto"),
                                  lam=lam, kappa=float(e.get("kappa", 0.5)), holder=holder)
        cov = covariance_from_config(cfg["covariance"]) if "covariance" in cfg else None
        return cls(target=cfg["target"], ladder=ladder, replicates=int(cfg["replicates"]),
                   estimator=est, dist=dist, lam=lam, covariance=cov,
                   seed=int(cfg.get("seed", 0)), output=cfg.get("output"),
                   bound_constant=float(cfg.get("bound_constant", 1.0)))


@dataclass
class RungResult:
    t: float
    delta: float
    n: int
    h: float
    rmse: float
    se: float
    bound: float
    failures: int = 0
    aborted: bool = False
    warnings: list[str] = field(default_factory=list)


@dataclass
class RiskReport:
    target: str
    rungs: list[RungResult]
    slope: float
    slope_se: float
    truth: float

    def csv_rows(self) -> list[tuple]:
        return [(r.t, r.delta, r.h, r.rmse, r.se, r.bound) for r in self.rungs]

    def write_csv(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(CSV_HEADER)
            w.writerows(self.csv_rows())
        return path

    def to_json(self) -> dict:
        return {"target": self.target, "truth": self.truth, "slope": self.slope,
                "slope_se": self.slope_se, "rungs": [asdict(r) for r in self.rungs]}

    def write(self, directory) -> tuple[Path, Path]:
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        csv_path = self.write_csv(d / f"risk_{self.target}.csv")
        json_path = d / f"risk_{self.target}.json"
        json_path.write_text(json.dumps(self.to_json(), indent=2))
        return csv_path, json_path


def default_output_dir() -> Path:
    return Path(os.environ.get(OUTPUT_ENV, "mginf_out"))


def fit_slope(T, rmse) -> tuple[float, float]:
    """Least-squares slope of log rmse on log T, with its standard error (nan for 2 points)."""
    x, y = np.log(np.asarray(T, float)), np.log(np.asarray(rmse, float))
    if x.size < 2:
        return math.nan, math.nan
    res = stats.linregress(x, y)
    se = res.stderr if x.size > 2 else math.nan
    return float(res.slope), float(se)


# ---------------------------------------------------------------- risk runs

def truth_value(spec: ExperimentSpec) -> float:
    if spec.target == "g":
        return float(spec.dist.cdf(spec.estimator.x0))
    if spec.target == "theta":
        return float(spec.covariance.derivative(spec.estimator.x0))
    return float(spec.lam)


def _bound(spec: ExperimentSpec, grid: GridSpec) -> float:
    C = spec.bound_constant
    cfg = spec.estimator
    if spec.target in ("lambda_up", "lambda_down"):
        return math.sqrt(spec.lam / grid.T)
    if cfg is None or cfg.holder is None:
        return math.nan
    if spec.target == "g":
        return risk_bound_g(cfg, grid.T, C)
    if spec.target == "lambda":
        return risk_bound_lambda(cfg, spec.lam, grid.T, C)
    return risk_bound_theta(cfg, grid.T, C)


def _replicate(spec: ExperimentSpec, grid: GridSpec, rng: np.random.Generator,
               gamma_lags: np.ndarray | None) -> tuple[float, float]:
    """(estimate, h_used) for one replicate."""
    if spec.target == "theta":
        x = sample_stationary_gaussian(gamma_lags, grid.n, seed=rng)
        res = estimate_theta(x, spec.estimator, grid)
        return res.estimate, res.h_used
    if spec.target in ("lambda_up", "lambda_down"):
        path = simulate(spec.dist, spec.lam, grid, rng)
        up, down = estimate_lambda_counting(path)
        return (up if spec.target == "lambda_up" else down), math.nan
    x = simulate_samples(spec.dist, spec.lam, grid, rng, 1)[0]
    res = (estimate_g if spec.target == "g" else estimate_lambda)(x, spec.estimator, grid)
    return res.estimate, res.h_used


def run_rung(spec: ExperimentSpec, rung: int, progress: Callable[[str], None] | None = None) -> RungResult:
    delta, n = spec.ladder[rung]
    grid = GridSpec(delta, n)
    truth = truth_value(spec)
    gamma_lags = spec.covariance(grid.delta * np.arange(n)) if spec.target == "theta" else None

    errors = np.full(spec.replicates, np.nan)
    h_used = math.nan
    failures = 0
    seen: list[str] = []
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ConditionWarning)
        for i in range(spec.replicates):
            try:
                est, h_used = _replicate(spec, grid, substream(spec.seed, rung, i), gamma_lags)
            except (ValueError, ArithmeticError, linalg.LinAlgError):
                failures += 1
                continue
            errors[i] = est - truth
    for w in caught:
        msg = str(w.message)
        if issubclass(w.category, ConditionWarning) and msg not in seen:
            seen.append(msg)

    bound = _bound(spec, grid)
    if failures > MAX_FAILURE_FRACTION * spec.replicates:
        return RungResult(grid.T, delta, n, h_used, math.nan, math.nan, bound, failures, True, seen)
    sq = errors[~np.isnan(errors)] ** 2
    mse = float(sq.mean())
    rmse = math.sqrt(mse)
    se_mse = float(sq.std(ddof=1) / math.sqrt(sq.size))
    se = se_mse / (2 * rmse) if rmse > 0 else 0.0
    if progress:
        progress(f"T={grid.T:g} delta={delta:g} h={h_used:.4g} rmse={rmse:.4g} se={se:.2g}")
    return RungResult(grid.T, delta, n, h_used, rmse, se, bound, failures, False, seen)


def run_risk(spec: ExperimentSpec, progress: Callable[[str], None] | None = None) -> RiskReport:
    rungs = [run_rung(spec, r, progress) for r in range(len(spec.ladder))]
    ok = [r for r in rungs if not r.aborted and r.rmse > 0]
    slope, se = fit_slope([r.t for r in ok], [r.rmse for r in ok])
    report = RiskReport(spec.target, rungs, slope, se, truth_value(spec))
    if spec.output:
        report.write(spec.output)
    return report


# ---------------------------------------------------------------- oracle suite

@dataclass
class OracleResult:
    name: str
    passed: bool
    statistic: float
    threshold: float
    detail: str = ""


def expansion_n4(h, rho: float, theta) -> float:
    """The n = 4 log-MGF written out term by term (independent of the pair loop)."""
    t1, t2, t3, t4 = theta
    e1, e2, e3, e4 = (math.expm1(t) for t in theta)
    H1, H2, H3 = h[1], h[2], h[3]
    s = e1 + e2 + e3 + e4
    s += H1 * e1 * e2 + H2 * e1 * math.exp(t2) * e3 + H3 * e1 * math.exp(t2 + t3) * e4
    s += H1 * e2 * e3 + H2 * e2 * math.exp(t3) * e4
    s += H1 * e3 * e4
    return rho * s


def run_oracle_suite(seed: int = 0, replicates: int = 20_000) -> list[OracleResult]:
    """Algebraic and simulation checks of the moment oracles; failures are returned, not raised."""
    out: list[OracleResult] = []
    rng = substream(seed, 0)

    # log-MGF pair sum vs the written-out n = 4 expansion
    worst = 0.0
    for _ in range(1000):
        h = np.concatenate([[1.0], np.sort(rng.uniform(0, 1, 3))[::-1]])
        rho = rng.uniform(0.1, 5)
        th = rng.uniform(-1, 1, 4)
        a, b = moments.log_mgf(h, rho, th), expansion_n4(h, rho, th)
        worst = max(worst, abs(a - b) / max(1.0, abs(b)))
    out.append(OracleResult("log_mgf n=4 expansion", worst <= 1e-12, worst, 1e-12))

    # degenerate indices reduce to Poisson raw moments
    rho = 1.7
    h = [1.0, 0.5]
    m3 = moments.mixed_moment3(h, rho, 1, 1, 1)
    m4 = moments.mixed_moment4(h, rho, 1, 1, 1, 1)
    dev = max(abs(m3 - (rho**3 + 3 * rho**2 + rho)), abs(m4 - (rho**4 + 6 * rho**3 + 7 * rho**2 + rho)))
    out.append(OracleResult("poisson raw moments", dev <= 1e-12, dev, 1e-12))

    # simulation: marginal law and mixed moments
    d = dists.Exponential(1.0)
    lam = 2.0
    rho = lam * d.mean()
    grid = GridSpec(0.5, 4)
    x = simulate_batch(d, lam, grid, seed, replicates)
    kmax = int(x[:, 0].max())
    counts = np.bincount(x[:, 0], minlength=kmax + 1)
    probs = stats.poisson.pmf(np.arange(kmax + 1), rho)
    probs[-1] += stats.poisson.sf(kmax, rho)
    exp_counts = probs * replicates
    # pool sparse cells
    keep = exp_counts >= 5
    obs = np.append(counts[keep], counts[~keep].sum())
    exp_ = np.append(exp_counts[keep], exp_counts[~keep].sum())
    if exp_[-1] == 0:
        obs, exp_ = obs[:-1], exp_[:-1]
    pval = float(stats.chisquare(obs, exp_ * obs.sum() / exp_.sum()).pvalue)
    out.append(OracleResult("poisson marginal chi-square", pval > 1e-3, pval, 1e-3))

    hs = dists.h_sequence(d, grid.delta, grid.n)
    xf = x.astype(float)
    for name, idx, exact in [
        ("E[X1 X2 X4]", (0, 1, 3), moments.mixed_moment3(hs, rho, 1, 2, 4)),
        ("E[X1 X2 X3 X4]", (0, 1, 2, 3), moments.mixed_moment4(hs, rho, 1, 2, 3, 4)),
    ]:
        prod = np.prod(xf[:, list(idx)], axis=1)
        z = abs(prod.mean() - exact) / (prod.std(ddof=1) / math.sqrt(replicates))
        out.append(OracleResult(f"{name} vs simulation", z <= 4.0, float(z), 4.0))

    th = np.array([0.2, -0.1, 0.15, -0.2])
    vals = np.exp(xf @ th)
    z = abs(vals.mean() - moments.mgf(hs, rho, th)) / (vals.std(ddof=1) / math.sqrt(replicates))
    out.append(OracleResult("mgf vs simulation", z <= 4.0, float(z), 4.0))
    return out


def format_table(results: list[OracleResult]) -> str:
    width = max(len(r.name) for r in results)
    lines = [f"{'check':<{width}}  status  statistic    threshold"]
    for r in results:
        lines.append(f"{r.name:<{width}}  {'PASS' if r.passed else 'FAIL':<6}  "
                     f"{r.statistic:<11.4g}  {r.threshold:g}")
    return "\n".join(lines)


def write_oracle_csv(results: list[OracleResult], path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("check", "passed", "statistic", "threshold"))
        for r in results:
            w.writerow((r.name, int(r.passed), r.statistic, r.threshold))
    return path
