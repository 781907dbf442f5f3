"""Line-delimited JSON dataset records and the per-system estimation pipeline.

One record per line::

    {"item_id": "q17", "system_id": "fastqa", "output_text": "...",
     "reference_texts": ["..."], "judgments": [{"prompt": "AnyCorrect", "value": 1}],
     "precomputed_metrics": {"vecsim": 0.41}}

``item_id``, ``system_id`` and ``output_text`` are required; the rest default
to empty.
"""

from __future__ import annotations

import json
import math
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .bootstrap import BootstrapConfig, bootstrap_ci
from .components import AnnotationTable, variance_components
from .errors import DuplicateKey, MissingField, NoJudgments, ParseError, UnknownMetric
from .estimators import PairedSample, control_variates, data_efficiency, fit_standardization, sample_mean
from .textmetrics import TEXT_METRICS, EmbeddingTable, score

REQUIRED = ("item_id", "system_id", "output_text")


@dataclass(frozen=True)
class DatasetRecord:
    item_id: str
    system_id: str
    output_text: str
    reference_texts: tuple[str, ...] = ()
    judgments: tuple[tuple[str, float], ...] = ()
    precomputed_metrics: dict[str, float] = field(default_factory=dict)

    @property
    def key(self) -> tuple[str, str]:
        return (self.item_id, self.system_id)

    def values_for(self, prompt: str) -> list[float]:
        return [v for p, v in self.judgments if p == prompt]

    def to_json(self) -> str:
        return json.dumps(
            {
                "item_id": self.item_id,
                "system_id": self.system_id,
                "output_text": self.output_text,
                "reference_texts": list(self.reference_texts),
                "judgments": [{"prompt": p, "value": v} for p, v in self.judgments],
                "precomputed_metrics": self.precomputed_metrics,
            },
            ensure_ascii=False,
        )


def _parse_record(obj, lineno: int) -> DatasetRecord:
    if not isinstance(obj, dict):
        raise ParseError(lineno, "record is not a JSON object")
    for name in REQUIRED:
        if name not in obj:
            raise MissingField(f"line {lineno}: missing field {name!r}")
    judgments = []
    for j in obj.get("judgments", []):
        try:
            value = float(j["value"])
            prompt = str(j["prompt"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(lineno, f"bad judgment {j!r}") from exc
        if not math.isfinite(value):
            raise ParseError(lineno, "judgment value is not finite")
        judgments.append((prompt, value))
    try:
        metrics = {str(k): float(v) for k, v in (obj.get("precomputed_metrics") or {}).items()}
    except (TypeError, ValueError, AttributeError) as exc:
        raise ParseError(lineno, "bad precomputed_metrics") from exc
    refs = obj.get("reference_texts", [])
    if isinstance(refs, str) or not isinstance(refs, list):
        raise ParseError(lineno, "reference_texts must be a list of strings")
    return DatasetRecord(
        item_id=str(obj["item_id"]),
        system_id=str(obj["system_id"]),
        output_text=str(obj["output_text"]),
        reference_texts=tuple(str(r) for r in refs),
        judgments=tuple(judgments),
        precomputed_metrics=metrics,
    )


def load_dataset(path) -> list[DatasetRecord]:
    records = []
    seen = set()
    with open(Path(path), encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(lineno, exc.msg) from exc
            rec = _parse_record(obj, lineno)
            if rec.key in seen:
                raise DuplicateKey(f"line {lineno}: duplicate (item_id, system_id) {rec.key}")
            seen.add(rec.key)
            records.append(rec)
    return records


def write_dataset(records: Iterable[DatasetRecord], path) -> None:
    with open(Path(path), "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(rec.to_json() + "\n")


def by_system(records: Sequence[DatasetRecord]) -> dict[str, list[DatasetRecord]]:
    groups: dict[str, list[DatasetRecord]] = defaultdict(list)
    for rec in records:
        groups[rec.system_id].append(rec)
    return dict(sorted(groups.items()))


def metric_values(records: Sequence[DatasetRecord], metric: str, emb: EmbeddingTable | None = None) -> np.ndarray:
    """Precomputed values win; otherwise registered text metrics are computed."""
    out = np.empty(len(records))
    for i, rec in enumerate(records):
        if metric in rec.precomputed_metrics:
            out[i] = rec.precomputed_metrics[metric]
        elif metric in TEXT_METRICS:
            out[i] = score(metric, rec.output_text, rec.reference_texts, emb)
        else:
            raise UnknownMetric(f"metric {metric!r} is neither precomputed for {rec.key} nor a text metric")
    return out


@dataclass(frozen=True)
class JudgedSystem:
    """One system's judged subset, with the metric standardized on all its outputs."""

    system_id: str
    table: AnnotationTable
    keys: list[str]
    g: np.ndarray
    n_population: int

    def sample(self, per_judgment: bool = False) -> PairedSample:
        if not per_judgment:
            y = np.array([np.mean(self.table.judgments[k]) for k in self.keys])
            return PairedSample(y, self.g)
        ys, gs = [], []
        for k, gi in zip(self.keys, self.g):
            vals = self.table.judgments[k]
            ys.extend(vals)
            gs.extend([gi] * len(vals))
        return PairedSample(np.array(ys), np.array(gs))


def judged_system(
    records: Sequence[DatasetRecord], metric: str, prompt: str, emb: EmbeddingTable | None = None
) -> JudgedSystem:
    raw = metric_values(records, metric, emb)
    g_all = fit_standardization(raw).transform(raw)
    judgments, keys, g = {}, [], []
    for rec, gi in zip(records, g_all):
        vals = rec.values_for(prompt)
        if vals:
            judgments[rec.item_id] = vals
            keys.append(rec.item_id)
            g.append(gi)
    if not keys:
        raise NoJudgments(f"no judgments for prompt {prompt!r}")
    return JudgedSystem(
        system_id=records[0].system_id,
        table=AnnotationTable(judgments),
        keys=keys,
        g=np.array(g),
        n_population=len(records),
    )


def _safe_corr(y: np.ndarray, g: np.ndarray) -> float:
    yc, gc = y - y.mean(), g - g.mean()
    syy, sgg = float(yc @ yc), float(gc @ gc)
    if syy <= 0 or sgg <= 0:
        return 0.0
    return max(-1.0, min(1.0, float(yc @ gc) / math.sqrt(syy * sgg)))


def estimate_system(
    js: JudgedSystem, cfg: BootstrapConfig, per_judgment: bool = False
) -> dict:
    """Control variates and sample mean estimates with bootstrap intervals and theory."""
    sample = js.sample(per_judgment)
    cv = control_variates(sample)
    sm = sample_mean(sample.y)
    ci_cv = bootstrap_ci("control_variates", sample, cfg)
    ci_sm = bootstrap_ci("sample_mean", sample, cfg)

    # item-level covariance, independent of the per-judgment expansion
    item_alpha = control_variates(js.sample(False)).alpha_hat
    sigma_a2 = sigma_f2 = gamma = rho = de = None
    clamped = False
    if any(len(v) >= 2 for v in js.table.judgments.values()) and len(js.table) >= 2:
        vc = variance_components(js.table)
        sigma_a2, sigma_f2, clamped = vc.sigma_a2, vc.sigma_f2, vc.clamped
        if sigma_f2 > 0:
            rho = max(-1.0, min(1.0, item_alpha / math.sqrt(sigma_f2)))
            gamma = sigma_a2 / sigma_f2
            de = data_efficiency(rho, gamma)
    r_obs = _safe_corr(sample.y, sample.g) if len(sample) >= 2 else 0.0
    return {
        "system_id": js.system_id,
        "n": len(js.keys),
        "n_samples": len(sample),
        "n_population": js.n_population,
        "n_judgments": js.table.n_judgments,
        "mu_hat": cv.mu_hat,
        "alpha_hat": cv.alpha_hat,
        "mu_simple": sm.mu_hat,
        "ci_cv": ci_cv._asdict(),
        "ci_simple": ci_sm._asdict(),
        "sigma_f2": sigma_f2,
        "sigma_a2": sigma_a2,
        "gamma": gamma,
        "rho_hat": rho,
        "variance_clamped": clamped,
        "data_efficiency": de,
        "observed_correlation": r_obs,
        "data_efficiency_observed": data_efficiency(r_obs, 0.0),
        "level": cfg.level,
        "bootstrap": cfg.replicates,
        "seed": cfg.seed,
        "per_judgment": per_judgment,
    }

