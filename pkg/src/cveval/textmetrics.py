"""Reference-based automatic metrics: ROUGE-N, ROUGE-L, sentence BLEU, VecSim."""

from __future__ import annotations

import math
import unicodedata
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import DimensionMismatch, NoReferences, ZeroN

Tokens = Sequence[str]


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def _strip_punct(token: str) -> str:
    start, end = 0, len(token)
    while start < end and _is_punct(token[start]):
        start += 1
    while end > start and _is_punct(token[end - 1]):
        end -= 1
    return token[start:end]


def tokenize(text: str) -> list[str]:
    """Lowercase, split on whitespace, trim edge punctuation, drop empties."""
    out = []
    for raw in text.lower().split():
        tok = _strip_punct(raw)
        if tok:
            out.append(tok)
    return out


def ngrams(tokens: Tokens, n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def _f1(matches: float, n_cand: int, n_ref: int) -> float:
    if n_cand == 0 or n_ref == 0 or matches == 0:
        return 0.0
    p = matches / n_cand
    r = matches / n_ref
    return 2 * p * r / (p + r)


def rouge_n(candidate: Tokens, reference: Tokens, n: int = 1) -> float:
    if n < 1:
        raise ZeroN("n-gram order must be at least 1")
    cand = ngrams(candidate, n)
    ref = ngrams(reference, n)
    matches = sum((cand & ref).values())
    return _f1(matches, sum(cand.values()), sum(ref.values()))


def lcs_length(a: Tokens, b: Tokens) -> int:
    if len(a) < len(b):
        a, b = b, a
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, 1):
            cur.append(prev[j - 1] + 1 if x == y else max(prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]


def rouge_l(candidate: Tokens, reference: Tokens) -> float:
    return _f1(lcs_length(candidate, reference), len(candidate), len(reference))


def bleu(candidate: Tokens, references: Sequence[Tokens], max_n: int = 4) -> float:
    """Sentence-level BLEU with uniform weights.

    A zero precision at some order is smoothed to ``1 / (2 * #candidate n-grams)``
    unless the unigram precision itself is zero, in which case the score is 0.
    Orders longer than the candidate contribute no n-grams and are left out of
    the geometric mean.
    """
    if not references:
        raise NoReferences("BLEU needs at least one reference")
    if max_n < 1:
        raise ZeroN("max_n must be at least 1")
    c = len(candidate)
    if c == 0:
        return 0.0
    log_p = []
    for n in range(1, min(max_n, c) + 1):
        cand = ngrams(candidate, n)
        max_ref: Counter = Counter()
        for ref in references:
            max_ref |= ngrams(ref, n)
        total = sum(cand.values())
        clipped = sum(min(cnt, max_ref[g]) for g, cnt in cand.items())
        if clipped == 0:
            if n == 1:
                return 0.0
            log_p.append(math.log(1.0 / (2 * total)))
        else:
            log_p.append(math.log(clipped / total))
    # closest reference length, ties to the shorter one
    r = min((abs(len(ref) - c), len(ref)) for ref in references)[1]
    bp = 1.0 if c > r else math.exp(1.0 - r / c)
    return bp * math.exp(sum(log_p) / len(log_p))


@dataclass(frozen=True)
class EmbeddingTable:
    vectors: Mapping[str, np.ndarray]
    dim: int

    def __post_init__(self):
        if self.dim < 1:
            raise DimensionMismatch("embedding dimension must be at least 1")
        for tok, vec in self.vectors.items():
            if np.shape(vec) != (self.dim,):
                raise DimensionMismatch(f"vector for {tok!r} has shape {np.shape(vec)}, expected ({self.dim},)")

    @classmethod
    def from_dict(cls, vectors: Mapping[str, Sequence[float]]) -> EmbeddingTable:
        arrs = {k: np.asarray(v, dtype=float) for k, v in vectors.items()}
        if not arrs:
            raise DimensionMismatch("empty embedding table")
        dim = len(next(iter(arrs.values())))
        return cls(arrs, dim)

    def sentence_vector(self, tokens: Tokens) -> np.ndarray | None:
        vecs = [self.vectors[t] for t in tokens if t in self.vectors]
        if not vecs:
            return None
        return np.mean(vecs, axis=0)


def load_embeddings(path) -> EmbeddingTable:
    """Read ``token v1 ... vd`` lines; an optional ``N d`` header line is skipped."""
    vectors: dict[str, np.ndarray] = {}
    dim = None
    with open(Path(path), encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts:
                continue
            if lineno == 1 and len(parts) == 2 and all(p.lstrip("-").isdigit() for p in parts):
                dim = int(parts[1])
                continue
            try:
                vec = np.array([float(p) for p in parts[1:]])
            except ValueError as exc:
                raise DimensionMismatch(f"line {lineno}: non-numeric vector entry") from exc
            if dim is None:
                dim = vec.size
            if vec.size != dim:
                raise DimensionMismatch(f"line {lineno}: expected {dim} values, got {vec.size}")
            vectors[parts[0]] = vec
    if dim is None:
        raise DimensionMismatch("embedding file is empty")
    return EmbeddingTable(vectors, dim)


def vec_sim(candidate: Tokens, reference: Tokens, emb: EmbeddingTable) -> float:
    a = emb.sentence_vector(candidate)
    b = emb.sentence_vector(reference)
    if a is None or b is None:
        return 0.0
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    if np.array_equal(a, b):
        return 1.0
    return max(-1.0, min(1.0, float(np.dot(a, b)) / (na * nb)))


TEXT_METRICS = ("rouge1", "rouge2", "rougeL", "bleu", "vecsim")


def score(metric: str, output_text: str, reference_texts: Sequence[str], emb: EmbeddingTable | None = None) -> float:
    """Score one output against its references.

    Multi-reference ROUGE and VecSim take the maximum over references; BLEU
    clips against all references jointly.
    """
    cand = tokenize(output_text)
    refs = [tokenize(r) for r in reference_texts]
    if not refs:
        raise NoReferences("output has no reference texts")
    if metric == "bleu":
        return bleu(cand, refs)
    if metric == "rouge1":
        return max(rouge_n(cand, r, 1) for r in refs)
    if metric == "rouge2":
        return max(rouge_n(cand, r, 2) for r in refs)
    if metric == "rougeL":
        return max(rouge_l(cand, r) for r in refs)
    if metric == "vecsim":
        if emb is None:
            raise ValueError("vecsim needs an embedding table")
        return max(vec_sim(cand, r, emb) for r in refs)
    raise KeyError(metric)
