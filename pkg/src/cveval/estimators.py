"""Unbiased estimators of mean human judgment and their closed-form variances.

Notation follows the usual control-variates setup:

* ``y``  human judgments of sampled outputs,
* ``g``  automatic metric of the same outputs, standardized to zero mean and
  unit variance over the *full* output population,
* ``sigma_f2`` variance of the expected human judgment across outputs,
* ``sigma_a2`` expected within-output (annotator) variance,
* ``alpha = Cov(f, g)``, ``rho = alpha / sigma_f``, ``gamma = sigma_a2 / sigma_f2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .errors import (
    DegenerateMetric,
    EmptyPopulation,
    EmptySample,
    LengthMismatch,
    NegativeGamma,
    NonpositiveTarget,
    RhoOutOfRange,
    ZeroN,
)

Method = Literal["sample_mean", "control_variates", "control_variates_oracle"]

# Variance at or below this is treated as a constant metric.
DEGENERATE_VARIANCE = 1e-15


@dataclass(frozen=True)
class MetricStandardization:
    """Population moments of the automatic metric (divide by N)."""

    mean: float
    std: float

    def __post_init__(self):
        if not self.std > 0:
            raise DegenerateMetric(f"standard deviation must be positive, got {self.std}")

    def transform(self, values) -> np.ndarray:
        return (np.asarray(values, dtype=float) - self.mean) / self.std


@dataclass(frozen=True)
class PairedSample:
    y: np.ndarray
    g: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float).ravel()
        g = np.asarray(self.g, dtype=float).ravel()
        if y.size != g.size:
            raise LengthMismatch(f"|y|={y.size} but |g|={g.size}")
        if y.size == 0:
            raise EmptySample("paired sample is empty")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "g", g)

    def __len__(self) -> int:
        return self.y.size

    def subset(self, idx) -> PairedSample:
        return PairedSample(self.y[idx], self.g[idx])


@dataclass(frozen=True)
class EstimateReport:
    mu_hat: float
    alpha_hat: float
    n: int
    method: Method
    variance_est: float | None = None

    def as_dict(self) -> dict:
        return {
            "method": self.method,
            "mu_hat": self.mu_hat,
            "alpha_hat": self.alpha_hat,
            "n": self.n,
            "variance_est": self.variance_est,
        }


@dataclass(frozen=True)
class TheoryParams:
    """Population parameters of the human/metric model.

    ``alpha`` and ``gamma`` are derived; use :meth:`from_alpha` when the
    covariance rather than the correlation is known.
    """

    sigma_f2: float
    sigma_a2: float
    rho: float = 0.0
    mu: float = 0.0
    alpha: float = field(init=False)
    gamma: float | None = field(init=False)

    def __post_init__(self):
        if self.sigma_f2 < 0 or self.sigma_a2 < 0:
            raise ValueError("variances must be nonnegative")
        if not -1.0 <= self.rho <= 1.0:
            raise RhoOutOfRange(f"rho={self.rho} outside [-1, 1]")
        object.__setattr__(self, "alpha", self.rho * math.sqrt(self.sigma_f2))
        gamma = self.sigma_a2 / self.sigma_f2 if self.sigma_f2 > 0 else None
        object.__setattr__(self, "gamma", gamma)

    @classmethod
    def from_alpha(cls, sigma_f2: float, sigma_a2: float, alpha: float, mu: float = 0.0) -> TheoryParams:
        if alpha * alpha > sigma_f2 * (1 + 1e-12):
            raise RhoOutOfRange(f"alpha^2={alpha * alpha} exceeds sigma_f2={sigma_f2}")
        if sigma_f2 == 0:
            rho = 0.0
        else:
            rho = max(-1.0, min(1.0, alpha / math.sqrt(sigma_f2)))
        return cls(sigma_f2=sigma_f2, sigma_a2=sigma_a2, rho=rho, mu=mu)


def fit_standardization(g_population) -> MetricStandardization:
    g = np.asarray(g_population, dtype=float).ravel()
    if g.size < 2:
        raise EmptyPopulation(f"need at least 2 metric values, got {g.size}")
    mean = float(g.mean())
    var = float(np.mean((g - mean) ** 2))
    if var <= DEGENERATE_VARIANCE:
        raise DegenerateMetric("automatic metric is constant over the population")
    return MetricStandardization(mean=mean, std=math.sqrt(var))


def _as_sample(sample) -> PairedSample:
    if isinstance(sample, PairedSample):
        return sample
    y, g = sample
    return PairedSample(y, g)


def sample_mean(y) -> EstimateReport:
    y = np.asarray(y, dtype=float).ravel()
    if y.size == 0:
        raise EmptySample("no judgments")
    n = y.size
    var = float(y.var(ddof=1)) / n if n > 1 else None
    return EstimateReport(mu_hat=float(y.mean()), alpha_hat=0.0, n=n, method="sample_mean", variance_est=var)


def control_variates(sample: PairedSample) -> EstimateReport:
    """Plug-in control variates estimate.

    ``alpha_hat`` is the 1/n covariance between judgments and the standardized
    metric; the estimate is ``mean(y - alpha_hat * g)``. The caller must have
    standardized ``g`` on the full output population.
    """
    s = _as_sample(sample)
    y, g = s.y, s.g
    n = y.size
    y_bar = y.mean()
    alpha_hat = float(np.sum((y - y_bar) * g) / n)
    resid = y - alpha_hat * g
    mu = float(resid.mean())
    var = float(resid.var(ddof=1)) / n if n > 1 else None
    return EstimateReport(mu_hat=mu, alpha_hat=alpha_hat, n=n, method="control_variates", variance_est=var)


def control_variates_oracle(sample: PairedSample, alpha: float) -> EstimateReport:
    """Control variates with a known coefficient; exactly unbiased for any fixed ``alpha``."""
    if not math.isfinite(alpha):
        raise ValueError("alpha must be finite")
    s = _as_sample(sample)
    n = len(s)
    resid = s.y - alpha * s.g
    var = float(resid.var(ddof=1)) / n if n > 1 else None
    return EstimateReport(
        mu_hat=float(resid.mean()), alpha_hat=float(alpha), n=n, method="control_variates_oracle", variance_est=var
    )


# Batched forms, one replicate per row. Used by the bootstrap and simulation code.

def batch_sample_mean(Y: np.ndarray) -> np.ndarray:
    return Y.mean(axis=-1)


def batch_control_variates(Y: np.ndarray, G: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n = Y.shape[-1]
    y_bar = Y.mean(axis=-1, keepdims=True)
    alpha_hat = np.sum((Y - y_bar) * G, axis=-1) / n
    mu = (Y - alpha_hat[..., None] * G).mean(axis=-1)
    return mu, alpha_hat


def batch_control_variates_oracle(Y: np.ndarray, G: np.ndarray, alpha: float) -> np.ndarray:
    return (Y - alpha * G).mean(axis=-1)


def _check_n(n: int) -> None:
    if n < 1:
        raise ZeroN(f"n must be at least 1, got {n}")


def _check_rho(rho: float) -> None:
    if not -1.0 <= rho <= 1.0:
        raise RhoOutOfRange(f"rho={rho} outside [-1, 1]")


def variance_simple(params: TheoryParams, n: int) -> float:
    _check_n(n)
    return (params.sigma_f2 + params.sigma_a2) / n


def variance_control(params: TheoryParams, n: int) -> float:
    _check_n(n)
    _check_rho(params.rho)
    return (params.sigma_f2 * (1.0 - params.rho**2) + params.sigma_a2) / n


def data_efficiency(rho: float, gamma: float) -> float:
    """Ratio of sample-mean variance to control-variates variance.

    Returns ``math.inf`` for a perfect metric with noiseless judgments.
    """
    _check_rho(rho)
    if gamma < 0:
        raise NegativeGamma(f"gamma={gamma} is negative")
    denom = 1.0 - rho * rho + gamma
    if denom <= 0.0:
        return math.inf
    return (1.0 + gamma) / denom


def plan_sample_size(params: TheoryParams, target_variance: float) -> int:
    """Smallest n whose control-variates variance is at most ``target_variance``."""
    if not target_variance > 0:
        raise NonpositiveTarget(f"target variance must be positive, got {target_variance}")
    _check_rho(params.rho)
    numer = params.sigma_f2 * (1.0 - params.rho**2) + params.sigma_a2
    if numer <= 0:
        return 1
    n = max(1, math.ceil(numer / target_variance))
    # ceil of a quotient that should be an integer can land one too high
    if n > 1 and numer / (n - 1) <= target_variance * (1 + 1e-12):
        n -= 1
    return n
