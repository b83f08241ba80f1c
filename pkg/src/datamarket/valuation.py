"""Data valuation providers.

Every provider emits per-(dataset, buyer) scores normalized to [0, 1] with
batch min-max scaling. Providers are pure functions of their inputs plus an
explicit seed, so concurrent use is unrestricted.

The gradient-influence scorer runs on a deliberately small linear-regression
model: gradients have closed forms, and the one-step training oracle can be
checked against them analytically.
"""
from __future__ import annotations

import csv
import math
import re
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigurationError, ParameterError, ScoreDataError, ScoreParseError

_TOKEN_RE = re.compile(r"[a-z0-9]+")


@dataclass(frozen=True)
class ValuationScore:
    dataset_id: str
    buyer_id: str
    raw: float
    normalized: float


@dataclass(frozen=True)
class Corpus:
    """Documents available for lexical scoring, with a designated representative subset."""

    documents: tuple[tuple[str, str], ...]  # (doc_id, text)
    representative_ids: frozenset[str]

    def __post_init__(self):
        ids = {doc_id for doc_id, _ in self.documents}
        missing = self.representative_ids - ids
        if missing:
            raise ConfigurationError(f"representative ids not in corpus: {sorted(missing)}")


def normalize_batch(raw: Sequence[float]) -> list[float]:
    """Min-max scale a batch into [0, 1]; a constant batch maps to all ones."""
    if not raw:
        return []
    lo, hi = min(raw), max(raw)
    if hi == lo:
        return [1.0] * len(raw)
    span = hi - lo
    return [(r - lo) / span for r in raw]


def _batch(dataset_ids: Sequence[str], buyer_id: str, raw: Sequence[float]) -> list[ValuationScore]:
    normalized = normalize_batch(raw)
    return [
        ValuationScore(dataset_id=d, buyer_id=buyer_id, raw=float(r), normalized=n)
        for d, r, n in zip(dataset_ids, raw, normalized)
    ]


def value_constant(dataset_ids: Sequence[str], buyer_id: str) -> list[ValuationScore]:
    """Flat-rate baseline: every dataset scores 1.0."""
    return _batch(dataset_ids, buyer_id, [1.0] * len(dataset_ids))


def value_random(dataset_ids: Sequence[str], buyer_id: str, seed: int) -> list[ValuationScore]:
    """Scores drawn i.i.d. uniform on [0, 1], reproducible per seed."""
    rng = np.random.default_rng(seed)
    raw = rng.uniform(0.0, 1.0, size=len(dataset_ids))
    return _batch(dataset_ids, buyer_id, [float(r) for r in raw])


# ---------------------------------------------------------------------------
# BM25 lexical similarity
# ---------------------------------------------------------------------------


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


class Bm25Index:
    """Okapi BM25 over a document collection.

    idf uses the smoothed, always-positive form ln(1 + (N - n + 0.5)/(n + 0.5))
    so single-document overlap still ranks above no overlap.
    """

    def __init__(self, texts: Sequence[str], k1: float = 1.2, b: float = 0.75):
        self.k1 = k1
        self.b = b
        self.docs = [tokenize(t) for t in texts]
        self.term_freqs = [Counter(d) for d in self.docs]
        self.doc_lens = [len(d) for d in self.docs]
        n_docs = len(self.docs)
        self.avgdl = (sum(self.doc_lens) / n_docs) if n_docs else 0.0
        df: Counter[str] = Counter()
        for tf in self.term_freqs:
            for term in tf:
                df[term] += 1
        self.idf = {
            term: math.log(1.0 + (n_docs - n + 0.5) / (n + 0.5)) for term, n in df.items()
        }

    def score(self, query: str, doc_index: int) -> float:
        tf = self.term_freqs[doc_index]
        dl = self.doc_lens[doc_index]
        norm = self.k1 * (1.0 - self.b + self.b * dl / self.avgdl) if self.avgdl else 0.0
        total = 0.0
        for term in tokenize(query):
            f = tf.get(term)
            if not f:
                continue
            total += self.idf.get(term, 0.0) * f * (self.k1 + 1.0) / (f + norm)
        return total


def value_bm25(
    corpus: Corpus, dataset_texts: Sequence[tuple[str, str]], buyer_id: str = "buyer"
) -> list[ValuationScore]:
    """Average BM25 similarity of each dataset text to the representative documents."""
    if not corpus.representative_ids:
        raise ConfigurationError("representative set is empty")
    index = Bm25Index([text for _, text in corpus.documents])
    rep_indices = [
        i for i, (doc_id, _) in enumerate(corpus.documents) if doc_id in corpus.representative_ids
    ]
    raw = [
        sum(index.score(text, i) for i in rep_indices) / len(rep_indices)
        for _, text in dataset_texts
    ]
    return _batch([d for d, _ in dataset_texts], buyer_id, raw)


# ---------------------------------------------------------------------------
# Gradient influence on a small differentiable model
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ToySample:
    features: tuple[float, ...]
    target: float


@dataclass(frozen=True)
class ToyModel:
    """Linear regression with squared loss: loss(d) = (theta . x_d - y_d)^2."""

    weights: tuple[float, ...]

    def loss(self, sample: ToySample) -> float:
        theta = np.asarray(self.weights)
        residual = float(theta @ np.asarray(sample.features)) - sample.target
        return residual * residual

    def gradient(self, sample: ToySample) -> np.ndarray:
        x = np.asarray(sample.features)
        theta = np.asarray(self.weights)
        residual = float(theta @ x) - sample.target
        return 2.0 * residual * x


def infl_ip(model: ToyModel, train_sample: ToySample, test_samples: Sequence[ToySample]) -> float:
    """Mean gradient inner product between the training sample and each test sample."""
    if not test_samples:
        raise ConfigurationError("influence needs a non-empty test set")
    g_train = model.gradient(train_sample)
    return float(np.mean([model.gradient(d) @ g_train for d in test_samples]))


def oracle_one_step(
    model: ToyModel, train_sample: ToySample, test_samples: Sequence[ToySample], eta: float
) -> float:
    """Mean test-loss drop after one gradient step of size eta on the training sample.

    Works on a private copy of the weights; the model itself is never mutated.
    """
    if eta <= 0:
        raise ParameterError(f"learning rate must be > 0, got {eta}")
    if not test_samples:
        raise ConfigurationError("oracle needs a non-empty test set")
    stepped = ToyModel(
        weights=tuple(np.asarray(model.weights) - eta * model.gradient(train_sample))
    )
    return float(np.mean([model.loss(d) - stepped.loss(d) for d in test_samples]))


# ---------------------------------------------------------------------------
# Score file ingestion
# ---------------------------------------------------------------------------


def ingest_scores(path) -> list[ValuationScore]:
    """Parse a score file (one `dataset_id,buyer_id,score` record per line) and
    batch-normalize it. Blank lines are ignored."""
    rows: list[tuple[str, str, float]] = []
    with open(path, encoding="utf-8", newline="") as fh:
        for line_number, record in enumerate(csv.reader(fh), start=1):
            if not record or (len(record) == 1 and not record[0].strip()):
                continue
            if len(record) != 3:
                raise ScoreParseError(
                    f"expected 3 fields (dataset_id, buyer_id, score), got {len(record)}",
                    line_number,
                )
            dataset_id, buyer_id, score_text = (f.strip() for f in record)
            try:
                score = float(score_text)
            except ValueError:
                raise ScoreParseError(f"score {score_text!r} is not a number", line_number) from None
            if math.isnan(score) or math.isinf(score):
                raise ScoreDataError(f"line {line_number}: score {score_text!r} is not finite")
            rows.append((dataset_id, buyer_id, score))
    normalized = normalize_batch([r[2] for r in rows])
    return [
        ValuationScore(dataset_id=d, buyer_id=b, raw=s, normalized=n)
        for (d, b, s), n in zip(rows, normalized)
    ]
