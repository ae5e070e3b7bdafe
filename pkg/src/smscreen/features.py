"""TF-IDF featurization over unigrams and bigrams, plus per-class analyses.

Formulas are the single source of truth for tests:
  idf_t = ln((1 + N) / (1 + df_t)) + 1
  vector = l2-normalized (count_t * idf_t), zero vectors exempt from the norm.
Feature selection keeps the max_features terms with the highest corpus-wide
raw count, ties broken lexicographically. Stopwords are kept.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .corpus import Corpus, clean_text
from .labels import ClassLabel

# index-sorted (index, weight) pairs
SparseVector = list[tuple[int, float]]

ARTIFACT_VERSION = 1
DEFAULT_MAX_FEATURES = 5000


def _terms(clean: str) -> list[str]:
    """Unigrams and bigrams from an already-normalized text."""
    toks = clean.split()
    terms = list(toks)
    terms.extend(f"{a} {b}" for a, b in zip(toks, toks[1:]))
    return terms


class TfidfModel:
    """Fitted vocabulary and idf weights; immutable after fit."""

    def __init__(self, vocabulary: dict[str, int], idf: np.ndarray, max_features: int):
        if len(vocabulary) != len(idf):
            raise ValueError("vocabulary and idf length mismatch")
        if sorted(vocabulary.values()) != list(range(len(vocabulary))):
            raise ValueError("vocabulary indices must be a bijection onto 0..V-1")
        if len(idf) and not np.all(idf > 0):
            raise ValueError("idf values must be positive")
        self._vocabulary = dict(vocabulary)
        self._idf = np.asarray(idf, dtype=np.float64)
        self._idf.setflags(write=False)
        self._max_features = max_features
        self._terms_by_index = [""] * len(vocabulary)
        for term, idx in vocabulary.items():
            self._terms_by_index[idx] = term

    @property
    def vocabulary(self) -> dict[str, int]:
        return dict(self._vocabulary)

    @property
    def idf(self) -> np.ndarray:
        return self._idf

    @property
    def max_features(self) -> int:
        return self._max_features

    @property
    def ngram_range(self) -> tuple[int, int]:
        return (1, 2)

    @property
    def n_features(self) -> int:
        return len(self._vocabulary)

    def term(self, index: int) -> str:
        return self._terms_by_index[index]

    def transform(self, text: str) -> SparseVector:
        """Vectorize one text; out-of-vocabulary terms are ignored.

        Texts with no in-vocabulary term map to the (legal) zero vector.
        """
        counts: Counter[int] = Counter()
        for term in _terms(clean_text(text)):
            idx = self._vocabulary.get(term)
            if idx is not None:
                counts[idx] += 1
        if not counts:
            return []
        indices = sorted(counts)
        weights = np.array([counts[i] * self._idf[i] for i in indices])
        weights /= math.sqrt(float(np.dot(weights, weights)))
        return list(zip(indices, weights.tolist()))

    def to_json(self) -> dict:
        return {
            "version": ARTIFACT_VERSION,
            "max_features": self._max_features,
            "ngram_range": [1, 2],
            "vocabulary": self._vocabulary,
            "idf": self._idf.tolist(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "TfidfModel":
        if obj.get("version") != ARTIFACT_VERSION:
            raise ValueError(f"unsupported vectorizer artifact version: {obj.get('version')}")
        return cls(
            vocabulary=obj["vocabulary"],
            idf=np.array(obj["idf"], dtype=np.float64),
            max_features=obj["max_features"],
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), sort_keys=True), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "TfidfModel":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def fit_tfidf(c: Corpus, max_features: int = DEFAULT_MAX_FEATURES) -> TfidfModel:
    """Fit vocabulary and idf weights on a corpus; deterministic."""
    if len(c) == 0:
        raise ValueError("cannot fit tf-idf on an empty corpus")
    raw_counts: Counter[str] = Counter()
    df: Counter[str] = Counter()
    for post in c:
        terms = _terms(post.clean_text)
        raw_counts.update(terms)
        df.update(set(terms))

    candidates = sorted(raw_counts)
    if len(candidates) > max_features:
        candidates = sorted(raw_counts, key=lambda t: (-raw_counts[t], t))[:max_features]
        candidates.sort()

    n_docs = len(c)
    vocabulary = {term: i for i, term in enumerate(candidates)}
    idf = np.array(
        [math.log((1 + n_docs) / (1 + df[t])) + 1.0 for t in candidates],
        dtype=np.float64,
    )
    return TfidfModel(vocabulary=vocabulary, idf=idf, max_features=max_features)


def transform(m: TfidfModel, text: str) -> SparseVector:
    return m.transform(text)


def to_dense(v: SparseVector, n_features: int) -> np.ndarray:
    out = np.zeros(n_features)
    for idx, val in v:
        out[idx] = val
    return out


@dataclass
class ClassProfile:
    label: ClassLabel
    mean_vector: np.ndarray
    top_terms: list[tuple[str, float]]


def class_profiles(
    m: TfidfModel,
    c: Corpus,
    k: int,
    labels: Optional[Sequence[ClassLabel]] = None,
    unigrams_only: bool = False,
) -> list[ClassProfile]:
    """Mean TF-IDF vector per class with its k strongest terms.

    `unigrams_only` restricts the top-terms ranking to single words (the
    report view); the mean vector always spans the full vocabulary.
    """
    wanted = list(labels) if labels is not None else list(c.classes())
    profiles = []
    for label in wanted:
        posts = c.by_class(label)
        if not posts:
            raise ValueError(f"class {label} absent from corpus")
        mean = np.zeros(m.n_features)
        for p in posts:
            for idx, val in m.transform(p.clean_text):
                mean[idx] += val
        mean /= len(posts)
        ranked = sorted(
            (
                (m.term(i), float(mean[i]))
                for i in range(m.n_features)
                if mean[i] > 0 and (not unigrams_only or " " not in m.term(i))
            ),
            key=lambda tw: (-tw[1], tw[0]),
        )
        profiles.append(ClassProfile(label=label, mean_vector=mean, top_terms=ranked[:k]))
    return profiles


@dataclass
class CorrelationResult:
    labels: list[ClassLabel]
    matrix: np.ndarray
    # (i, j) pairs whose correlation is undefined (a constant mean vector)
    flagged: list[tuple[int, int]]


def class_correlation(profiles: Sequence[ClassProfile]) -> CorrelationResult:
    """Pairwise Pearson correlation between class mean vectors.

    Undefined entries (constant vectors) are flagged explicitly rather than
    left as silent NaN.
    """
    if len(profiles) < 2:
        raise ValueError("need at least 2 class profiles")
    k = len(profiles)
    matrix = np.ones((k, k))
    flagged: list[tuple[int, int]] = []
    centered = []
    norms = []
    for p in profiles:
        c = p.mean_vector - p.mean_vector.mean()
        centered.append(c)
        norms.append(math.sqrt(float(np.dot(c, c))))
    for i in range(k):
        for j in range(i + 1, k):
            if norms[i] == 0.0 or norms[j] == 0.0:
                matrix[i, j] = matrix[j, i] = np.nan
                flagged.append((i, j))
            else:
                r = float(np.dot(centered[i], centered[j]) / (norms[i] * norms[j]))
                matrix[i, j] = matrix[j, i] = r
    return CorrelationResult(labels=[p.label for p in profiles], matrix=matrix, flagged=flagged)
