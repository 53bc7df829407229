"""Nonparametric estimation of the service-time law of an M/G/infinity queue
from equally spaced samples of its queue-length process.

Modules
-------
dists       service-time families with closed-form stationary-excess tails
sim         exact stationary simulation on a sampling grid
moments     joint MGF and mixed moments of the sampled counts
covest      lag covariance estimators
lpweights   minimum-norm derivative weights
estimators  G(x0), arrival-rate and covariance-derivative estimators
gaussian    stationary Gaussian sampling and Toeplitz KL divergence
lowerbound  two-point lower-bound construction
harness     Monte Carlo risk ladders and oracle self-checks
"""
from .dists import (
    DiracMixture,
    Exponential,
    Gamma,
    HolderClass,
    LogNormal,
    ServiceDist,
    Uniform,
    Weibull,
)
from .estimators import (
    EstimatorConfig,
    estimate_g,
    estimate_g_combined,
    estimate_lambda,
    estimate_lambda_counting,
    estimate_theta,
)
from .sim import GridSpec, PathRecord, simulate

__version__ = "0.1.0"

__all__ = [
    "DiracMixture", "Exponential", "Gamma", "HolderClass", "LogNormal", "ServiceDist",
    "Uniform", "Weibull", "EstimatorConfig", "estimate_g", "estimate_g_combined",
    "estimate_lambda", "estimate_lambda_counting", "estimate_theta", "GridSpec",
    "PathRecord", "simulate",
]
