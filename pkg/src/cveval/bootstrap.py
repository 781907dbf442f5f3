"""Percentile bootstrap intervals and CI-width trajectories."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, NamedTuple, Sequence

import numpy as np

from .errors import EmptySample, GridExceedsData, ZeroWidth
from .estimators import PairedSample, batch_control_variates, batch_sample_mean
from .streams import map_blocks, stream

Estimator = Literal["sample_mean", "control_variates"]

# replicates per RNG stream
BLOCK = 128
_TAG_RESAMPLE = 0
_TAG_SUBSAMPLE = 1


@dataclass(frozen=True)
class BootstrapConfig:
    level: float = 0.80
    replicates: int = 1000
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if not 0 < self.level < 1:
            raise ValueError(f"level must lie in (0, 1), got {self.level}")
        if self.replicates < 2:
            raise ValueError("need at least 2 bootstrap replicates")


class Interval(NamedTuple):
    lo: float
    hi: float
    width: float


@dataclass(frozen=True)
class TrajectoryPoint:
    n: int
    width_simple: float
    width_cv: float


def _coerce(estimator: Estimator, sample) -> PairedSample:
    if isinstance(sample, PairedSample):
        return sample
    y = np.asarray(sample, dtype=float).ravel()
    if y.size == 0:
        raise EmptySample("bootstrap sample is empty")
    if estimator != "sample_mean":
        raise TypeError("control variates needs a PairedSample")
    return PairedSample(y, np.zeros_like(y))


def bootstrap_distribution(estimator: Estimator, sample, cfg: BootstrapConfig) -> np.ndarray:
    """Estimator values over ``cfg.replicates`` resamples of (y, g) pairs."""
    s = _coerce(estimator, sample)
    n = len(s)

    def run(block: int, count: int) -> np.ndarray:
        idx = stream(cfg.seed, _TAG_RESAMPLE, block).integers(0, n, size=(count, n))
        if estimator == "sample_mean":
            return batch_sample_mean(s.y[idx])
        if estimator == "control_variates":
            return batch_control_variates(s.y[idx], s.g[idx])[0]
        raise ValueError(f"unknown estimator {estimator!r}")

    return np.concatenate(map_blocks(run, cfg.replicates, BLOCK, cfg.workers))


def percentile_interval(values: np.ndarray, level: float) -> Interval:
    tail = (1.0 - level) / 2.0
    lo, hi = np.quantile(values, [tail, 1.0 - tail], method="linear")
    return Interval(float(lo), float(hi), float(hi - lo))


def bootstrap_ci(estimator: Estimator, sample, cfg: BootstrapConfig = BootstrapConfig()) -> Interval:
    return percentile_interval(bootstrap_distribution(estimator, sample, cfg), cfg.level)


def trajectory(
    items: PairedSample, n_grid: Sequence[int], reps_per_n: int, cfg: BootstrapConfig = BootstrapConfig()
) -> list[TrajectoryPoint]:
    """Mean bootstrap CI width of both estimators on random subsamples of each size.

    Subsamples are drawn without replacement and kept in dataset order. The
    ``r``-th subsample at every grid size is bootstrapped with seed
    ``cfg.seed + r``, so both estimators see the same resample indices.
    """
    N = len(items)
    if reps_per_n < 1:
        raise ValueError("reps_per_n must be at least 1")
    for n in n_grid:
        if n < 1 or n > N:
            raise GridExceedsData(f"grid size {n} not in [1, {N}]")
    points = []
    for i, n in enumerate(n_grid):
        ws, wc = [], []
        for r in range(reps_per_n):
            if n == N:
                idx = np.arange(N)
            else:
                idx = np.sort(stream(cfg.seed, _TAG_SUBSAMPLE, i, r).choice(N, size=n, replace=False))
            sub = items.subset(idx)
            rcfg = BootstrapConfig(cfg.level, cfg.replicates, cfg.seed + r, cfg.workers)
            ws.append(bootstrap_ci("sample_mean", sub, rcfg).width)
            wc.append(bootstrap_ci("control_variates", sub, rcfg).width)
        points.append(TrajectoryPoint(int(n), float(np.mean(ws)), float(np.mean(wc))))
    return points


def empirical_data_efficiency(traj: Sequence[TrajectoryPoint]) -> float:
    """Average squared ratio of sample-mean to control-variates CI widths."""
    if not traj:
        raise ValueError("empty trajectory")
    ratios = []
    for p in traj:
        if not p.width_cv > 0:
            raise ZeroWidth(f"control variates width is {p.width_cv} at n={p.n}")
        ratios.append((p.width_simple / p.width_cv) ** 2)
    return float(np.mean(ratios))
