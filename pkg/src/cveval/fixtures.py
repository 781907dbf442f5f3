"""Constructed datasets with known population values, for end-to-end checks."""

from __future__ import annotations

import math

import numpy as np

from .dataset import DatasetRecord
from .streams import stream


def _unit(v: np.ndarray) -> np.ndarray:
    v = v - v.mean()
    return v / math.sqrt(np.mean(v * v))


def plant_dataset(
    n_items: int = 200,
    mu: float = 0.6,
    sigma_f2: float = 0.04,
    rho: float = 0.7,
    gamma: float = 0.5,
    judgments_per_item: int = 3,
    n_judged: int | None = None,
    seed: int = 0,
    prompt: str = "Overall",
    metric: str = "plant",
    system_id: str = "sys",
) -> list[DatasetRecord]:
    """Records whose latent human scores hit the planted moments exactly.

    Over all ``n_items`` records the latent score f has mean ``mu``, population
    variance ``sigma_f2`` and correlation ``rho`` with the precomputed metric.
    Judgments add independent N(0, gamma * sigma_f2) noise; only the first
    ``n_judged`` records (default all) carry judgments.
    """
    rng = stream(seed, 7, 0)
    g = _unit(rng.standard_normal(n_items))
    e = rng.standard_normal(n_items)
    e = e - e.mean()
    e = _unit(e - (e @ g) / (g @ g) * g)
    sf = math.sqrt(sigma_f2)
    f = mu + sf * (rho * g + math.sqrt(1 - rho * rho) * e)
    sa = math.sqrt(gamma * sigma_f2)
    n_judged = n_items if n_judged is None else n_judged
    raw_metric = 0.35 + 0.1 * g
    records = []
    for i in range(n_items):
        js = ()
        if i < n_judged:
            noise = sa * rng.standard_normal(judgments_per_item)
            js = tuple((prompt, float(f[i] + z)) for z in noise)
        records.append(
            DatasetRecord(
                item_id=f"item{i:04d}",
                system_id=system_id,
                output_text="",
                judgments=js,
                precomputed_metrics={metric: float(raw_metric[i])},
            )
        )
    return records
