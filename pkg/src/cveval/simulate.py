"""Synthetic worlds and Monte Carlo checks of the estimator theory.

The world draws, per output,

    g = e1
    f = mu + alpha * e1 + skew * (e1**2 - 1) / sqrt(2) + sqrt(sigma_f2 - alpha**2 - skew**2) * e2
    y = f + sqrt(sigma_a2) * e3

with e1, e2, e3 iid standard normal. ``skew = 0`` is the Gaussian world in
which the control-variates estimator is the MVUE. A nonzero ``skew`` keeps
Var(f), Var(g) = 1 and Cov(f, g) = alpha but makes E[(f - mu) g^2] =
sqrt(2) * skew, the moment that drives the plug-in estimator's bias
-(n - 1) / n^2 * sqrt(2) * skew. In the Gaussian world that moment is zero
and the plug-in estimator is exactly unbiased.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace
from typing import Literal, Sequence

import numpy as np

from .errors import NotPSD, TooFewPoints, TooFewReplicates
from .estimators import (
    TheoryParams,
    batch_control_variates,
    batch_control_variates_oracle,
    batch_sample_mean,
    variance_control,
    variance_simple,
)
from .linalg import TwoFactorConfig
from .streams import map_blocks, stream

SimEstimator = Literal["sample_mean", "control_variates_oracle", "control_variates"]

MIN_REPLICATES = 1000
# replicates per RNG stream
BLOCK = 4096
_TAG_WORLD = 0
_TAG_TWO_FACTOR = 1


@dataclass(frozen=True)
class GaussianWorldConfig:
    mu: float
    sigma_f2: float
    sigma_a2: float
    alpha: float
    n: int
    seed: int = 0
    skew: float = 0.0

    def __post_init__(self):
        if self.sigma_f2 < 0 or self.sigma_a2 < 0:
            raise NotPSD("variances must be nonnegative")
        if self.alpha**2 + self.skew**2 > self.sigma_f2 * (1 + 1e-12) + 1e-15:
            raise NotPSD(f"alpha^2 + skew^2 = {self.alpha**2 + self.skew**2} exceeds sigma_f2 = {self.sigma_f2}")
        if self.n < 1:
            raise ValueError("n must be at least 1")

    @classmethod
    def from_rho(cls, mu: float, sigma_f2: float, sigma_a2: float, rho: float, n: int, seed: int = 0, skew: float = 0.0):
        return cls(mu, sigma_f2, sigma_a2, rho * math.sqrt(sigma_f2), n, seed, skew)

    @property
    def residual_sd(self) -> float:
        return math.sqrt(max(0.0, self.sigma_f2 - self.alpha**2 - self.skew**2))

    @property
    def theory(self) -> TheoryParams:
        return TheoryParams.from_alpha(self.sigma_f2, self.sigma_a2, self.alpha, self.mu)

    @property
    def third_moment(self) -> float:
        """E[(f - mu) g^2]."""
        return math.sqrt(2.0) * self.skew

    def plugin_bias(self, n: int | None = None) -> float:
        n = self.n if n is None else n
        return -(n - 1) / n**2 * self.third_moment


@dataclass(frozen=True)
class WorldDraw:
    f: np.ndarray
    g: np.ndarray
    y: np.ndarray


def _draw(cfg: GaussianWorldConfig, rng: np.random.Generator, shape) -> WorldDraw:
    e = rng.standard_normal((3, *shape))
    g = e[0]
    f = np.full(shape, float(cfg.mu))
    if cfg.alpha:
        f = f + cfg.alpha * g
    if cfg.skew:
        f = f + cfg.skew * (g * g - 1.0) / math.sqrt(2.0)
    if cfg.residual_sd:
        f = f + cfg.residual_sd * e[1]
    y = f + math.sqrt(cfg.sigma_a2) * e[2] if cfg.sigma_a2 else f.copy()
    return WorldDraw(f=f, g=g, y=y)


def sample_world(cfg: GaussianWorldConfig) -> WorldDraw:
    return _draw(cfg, stream(cfg.seed, _TAG_WORLD, 0), (cfg.n,))


def _estimates(cfg: GaussianWorldConfig, estimator: SimEstimator, replicates: int, workers: int) -> np.ndarray:
    def run(block: int, count: int) -> np.ndarray:
        w = _draw(cfg, stream(cfg.seed, _TAG_WORLD, cfg.n, block), (count, cfg.n))
        if estimator == "sample_mean":
            return batch_sample_mean(w.y)
        if estimator == "control_variates_oracle":
            return batch_control_variates_oracle(w.y, w.g, cfg.alpha)
        if estimator == "control_variates":
            return batch_control_variates(w.y, w.g)[0]
        raise ValueError(f"unknown estimator {estimator!r}")

    return np.concatenate(map_blocks(run, replicates, BLOCK, workers))


@dataclass(frozen=True)
class VarianceCheck:
    estimator: str
    empirical_var: float
    theory_var: float
    rel_err: float
    se: float
    mean: float
    mean_se: float
    replicates: int
    config: GaussianWorldConfig

    def as_dict(self) -> dict:
        d = asdict(self)
        d["config"] = asdict(self.config)
        return d


def verify_estimator_variance(
    cfg: GaussianWorldConfig,
    estimator: SimEstimator,
    replicates: int,
    workers: int = 1,
    theory_var: float | None = None,
) -> VarianceCheck:
    """Empirical variance of an estimator across replicates versus its closed form.

    ``se`` is the standard error of the empirical variance, from the sample
    fourth central moment. ``theory_var`` overrides the closed form.
    """
    if replicates < MIN_REPLICATES:
        raise TooFewReplicates(f"need at least {MIN_REPLICATES} replicates, got {replicates}")
    est = _estimates(cfg, estimator, replicates, workers)
    if theory_var is None:
        p = cfg.theory
        theory_var = variance_simple(p, cfg.n) if estimator == "sample_mean" else variance_control(p, cfg.n)
    centered = est - est.mean()
    var = float(np.mean(centered**2)) * replicates / (replicates - 1)
    m4 = float(np.mean(centered**4))
    se = math.sqrt(max(0.0, m4 - var * var) / replicates)
    rel_err = abs(var - theory_var) / theory_var if theory_var > 0 else abs(var - theory_var)
    return VarianceCheck(
        estimator=estimator,
        empirical_var=var,
        theory_var=float(theory_var),
        rel_err=float(rel_err),
        se=se,
        mean=float(est.mean()),
        mean_se=math.sqrt(var / replicates),
        replicates=replicates,
        config=cfg,
    )


@dataclass(frozen=True)
class BiasPoint:
    n: int
    bias: float
    se: float
    predicted: float


@dataclass(frozen=True)
class BiasCurve:
    estimator: str
    points: list[BiasPoint]
    slope: float
    replicates: int
    config: GaussianWorldConfig

    def within_noise(self, k: float = 4.0) -> bool:
        return all(abs(p.bias) < k * p.se for p in self.points)

    def as_dict(self) -> dict:
        return {
            "estimator": self.estimator,
            "points": [asdict(p) for p in self.points],
            "slope": self.slope,
            "replicates": self.replicates,
            "config": asdict(self.config),
        }


def loglog_slope(ns: Sequence[float], values: Sequence[float]) -> float:
    """Least-squares slope of log|value| against log n (nan if any value is 0)."""
    v = np.abs(np.asarray(values, dtype=float))
    if np.any(v == 0):
        return math.nan
    slope, _ = np.polyfit(np.log(np.asarray(ns, dtype=float)), np.log(v), 1)
    return float(slope)


def bias_curve(
    cfg: GaussianWorldConfig,
    n_list: Sequence[int],
    replicates: int,
    estimator: SimEstimator = "control_variates",
    workers: int = 1,
) -> BiasCurve:
    """Monte Carlo bias of an estimator at each sample size, with a log-log slope fit.

    ``predicted`` holds the closed-form plug-in bias for ``control_variates``
    and 0 for the unbiased estimators.
    """
    n_list = [int(n) for n in n_list]
    if len(n_list) < 3:
        raise TooFewPoints("need at least 3 sample sizes")
    if any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise ValueError("n_list must be strictly increasing")
    if replicates < MIN_REPLICATES:
        raise TooFewReplicates(f"need at least {MIN_REPLICATES} replicates, got {replicates}")
    points = []
    for n in n_list:
        est = _estimates(replace(cfg, n=n), estimator, replicates, workers)
        predicted = cfg.plugin_bias(n) if estimator == "control_variates" else 0.0
        points.append(
            BiasPoint(
                n=n,
                bias=float(est.mean() - cfg.mu),
                se=float(est.std(ddof=1) / math.sqrt(replicates)),
                predicted=predicted,
            )
        )
    slope = loglog_slope([p.n for p in points], [p.bias for p in points])
    return BiasCurve(estimator=estimator, points=points, slope=slope, replicates=replicates, config=cfg)


# Alternatives for the minimax spot check. All are unbiased in the Gaussian
# world except the plug-in estimators, whose bias vanishes there too.
def _alternatives(y: np.ndarray, g: np.ndarray, alpha: float) -> dict[str, np.ndarray]:
    n = y.shape[-1]
    gc = g - g.mean(axis=-1, keepdims=True)
    yc = y - y.mean(axis=-1, keepdims=True)
    ols_slope = np.sum(yc * gc, axis=-1) / np.sum(gc * gc, axis=-1)
    ys = np.sort(y, axis=-1)
    cut = n // 5
    return {
        "control_variates_oracle": batch_control_variates_oracle(y, g, alpha),
        "sample_mean": batch_sample_mean(y),
        "median": np.median(y, axis=-1),
        "trimmed_mean_20": ys[..., cut : n - cut].mean(axis=-1),
        "oracle_half_alpha": batch_control_variates_oracle(y, g, 0.5 * alpha),
        "oracle_1.5_alpha": batch_control_variates_oracle(y, g, 1.5 * alpha),
        "control_variates_plugin": batch_control_variates(y, g)[0],
        "regression_known_g_mean": y.mean(axis=-1) - ols_slope * g.mean(axis=-1),
    }


def minimax_check(cfg: GaussianWorldConfig, replicates: int, workers: int = 1) -> dict[str, float]:
    """Empirical variance of each alternative estimator on shared draws."""
    if replicates < MIN_REPLICATES:
        raise TooFewReplicates(f"need at least {MIN_REPLICATES} replicates, got {replicates}")

    def run(block: int, count: int) -> dict[str, np.ndarray]:
        w = _draw(cfg, stream(cfg.seed, _TAG_WORLD, cfg.n, block), (count, cfg.n))
        return _alternatives(w.y, w.g, cfg.alpha)

    parts = map_blocks(run, replicates, BLOCK, workers)
    return {name: float(np.var(np.concatenate([p[name] for p in parts]), ddof=1)) for name in parts[0]}


def sample_two_factor(cfg: TwoFactorConfig, seed: int, size: int | None = None) -> np.ndarray:
    """Draw response vectors y_i = x[u(i)] + w[v(i)] + r_i.

    Returns shape ``(m,)`` or ``(size, m)``.
    """
    shape = () if size is None else (size,)
    rng = stream(seed, _TAG_TWO_FACTOR, 0)
    U = cfg.items
    x = cfg.mu_X + math.sqrt(cfg.sigma_X2) * rng.standard_normal((*shape, U.n_cols))
    w = math.sqrt(cfg.sigma_W2) * rng.standard_normal((*shape, cfg.V.n_cols))
    r = math.sqrt(cfg.sigma_R2) * rng.standard_normal((*shape, cfg.m))
    return x[..., U.cols] + w[..., cfg.V.cols] + r
