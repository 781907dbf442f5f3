"""Variance components and correlations from multiply-annotated judgments."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Mapping, Sequence

import numpy as np
from scipy.stats import rankdata

from .errors import (
    DegenerateF,
    DegenerateInput,
    EmptySample,
    LengthMismatch,
    NoReplicatedItems,
    TooFewItems,
)


@dataclass(frozen=True)
class AnnotationTable:
    """Repeated human judgments keyed by item, with optional raw metric values."""

    judgments: Mapping[str, tuple[float, ...]]
    metric: Mapping[str, float] | None = None

    def __post_init__(self):
        clean = {}
        for item_id, values in self.judgments.items():
            vals = tuple(float(v) for v in values)
            if not vals:
                raise EmptySample(f"item {item_id!r} has no judgments")
            clean[str(item_id)] = vals
        object.__setattr__(self, "judgments", clean)

    @classmethod
    def from_rows(cls, rows: Sequence[tuple[str, Sequence[float]]], metric=None) -> AnnotationTable:
        table = {}
        for item_id, values in rows:
            if item_id in table:
                raise ValueError(f"duplicate item id {item_id!r}")
            table[item_id] = values
        return cls(table, metric)

    def __len__(self) -> int:
        return len(self.judgments)

    @property
    def n_judgments(self) -> int:
        return sum(len(v) for v in self.judgments.values())


@dataclass(frozen=True)
class VarianceComponents:
    sigma_a2: float
    sigma_f2: float
    n_items: int
    n_judgments: int
    clamped: bool = False

    @property
    def gamma(self) -> float | None:
        return self.sigma_a2 / self.sigma_f2 if self.sigma_f2 > 0 else None


@dataclass(frozen=True)
class CorrelationReport:
    pearson: float
    spearman: float
    n: int
    level: Literal["instance", "system"]

    def as_dict(self) -> dict:
        return {"level": self.level, "pearson": self.pearson, "spearman": self.spearman, "n": self.n}


def item_means(table: AnnotationTable) -> dict[str, float]:
    return {k: float(np.mean(v)) for k, v in table.judgments.items()}


def estimate_annotator_variance(table: AnnotationTable) -> float:
    """Unweighted mean over replicated items of the unbiased within-item variance."""
    within = [np.var(v, ddof=1) for v in table.judgments.values() if len(v) >= 2]
    if not within:
        raise NoReplicatedItems("no item has two or more judgments")
    return float(np.mean(within))


def _between_moments(table: AnnotationTable) -> tuple[float, float]:
    if len(table) < 2:
        raise TooFewItems(f"need at least 2 items, got {len(table)}")
    means = np.array([np.mean(v) for v in table.judgments.values()])
    inv_k = np.array([1.0 / len(v) for v in table.judgments.values()])
    return float(means.var(ddof=1)), float(inv_k.mean())


def estimate_human_metric_variance(table: AnnotationTable, sigma_a2: float) -> float:
    """Method-of-moments estimate of Var(f), clamped at zero.

    The between-item variance of item means overstates Var(f) by the
    annotator variance times the average of 1/k_i.
    """
    s2_between, mean_inv_k = _between_moments(table)
    return max(0.0, s2_between - sigma_a2 * mean_inv_k)


def variance_components(table: AnnotationTable) -> VarianceComponents:
    sigma_a2 = estimate_annotator_variance(table)
    s2_between, mean_inv_k = _between_moments(table)
    raw = s2_between - sigma_a2 * mean_inv_k
    return VarianceComponents(
        sigma_a2=sigma_a2,
        sigma_f2=max(0.0, raw),
        n_items=len(table),
        n_judgments=table.n_judgments,
        clamped=raw < 0,
    )


def _paired(x, y, min_len: int = 2) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.size != y.size:
        raise LengthMismatch(f"lengths differ: {x.size} vs {y.size}")
    if x.size < min_len:
        raise EmptySample(f"need at least {min_len} pairs, got {x.size}")
    return x, y


def _pearson(x: np.ndarray, y: np.ndarray) -> float:
    xc = x - x.mean()
    yc = y - y.mean()
    sxx = float(np.dot(xc, xc))
    syy = float(np.dot(yc, yc))
    if sxx <= 0 or syy <= 0:
        raise DegenerateInput("correlation undefined for a constant vector")
    if np.array_equal(xc, yc):
        return 1.0
    r =float(np.dot(xc, yc)) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


def estimate_alpha_rho(f_hat, g_std) -> tuple[float, float]:
    """Population covariance and Pearson correlation of human means and metric."""
    f, g = _paired(f_hat, g_std)
    if np.var(f) <= 0:
        raise DegenerateF("human means are constant; rho is undefined")
    alpha = float(np.mean((f - f.mean()) * (g - g.mean())))
    try:
        rho = _pearson(f, g)
    except DegenerateInput as exc:
        raise DegenerateF(str(exc)) from exc
    return alpha, rho


def correlation_report(x, y, level: Literal["instance", "system"] = "instance") -> CorrelationReport:
    x, y = _paired(x, y)
    pearson = _pearson(x, y)
    spearman = _pearson(rankdata(x, method="average"), rankdata(y, method="average"))
    return CorrelationReport(pearson=pearson, spearman=spearman, n=int(x.size), level=level)
