"""Bag-of-words term-frequency features over normalized documents.

Tokens are maximal alphanumeric runs; everything else separates. Weights
are per-document term frequencies (count over total tokens), so vectors
of fully in-vocabulary documents are L1-normalized and out-of-vocabulary
tokens shrink the sum while their share is reported separately.
"""
from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

_TOKEN_RE = re.compile(r"[A-Za-z0-9]+")


class EmptyCorpus(Exception):
    """No nonempty document to build a vocabulary from."""


def tokenize(doc) -> list:
    """Alphanumeric-run tokens of a document or plain string."""
    return _TOKEN_RE.findall(getattr(doc, "text", doc))


@dataclass(frozen=True)
class Vocabulary:
    tokens: tuple
    built_from: str = ""

    def __post_init__(self):
        object.__setattr__(self, "_index",
                           {t: i for i, t in enumerate(self.tokens)})

    def __len__(self):
        return len(self.tokens)

    def index(self, token: str):
        return self._index.get(token)

    @property
    def fingerprint(self) -> str:
        h = hashlib.sha256("\x1f".join(self.tokens).encode())
        return h.hexdigest()


@dataclass(frozen=True)
class FeatureVector:
    weights: np.ndarray
    oov_rate: float


def fit_vocabulary(docs) -> Vocabulary:
    tokens = set()
    h = hashlib.sha256()
    nonempty = False
    for doc in docs:
        ts = tokenize(doc)
        h.update(getattr(doc, "text", doc).encode())
        h.update(b"\x00")
        if ts:
            nonempty = True
            tokens.update(ts)
    if not nonempty:
        raise EmptyCorpus("every document is empty")
    return Vocabulary(tuple(sorted(tokens)), h.hexdigest())


def transform(doc, vocab: Vocabulary) -> FeatureVector:
    weights = np.zeros(len(vocab), dtype=np.float64)
    tokens = tokenize(doc)
    if not tokens:
        return FeatureVector(weights, 0.0)
    oov = 0
    for t in tokens:
        i = vocab.index(t)
        if i is None:
            oov += 1
        else:
            weights[i] += 1.0
    weights /= len(tokens)
    return FeatureVector(weights, oov / len(tokens))


class TermFrequencyVectorizer:
    """Estimator-style wrapper: fit builds the vocabulary, transform
    produces the (documents x tokens) matrix and records OOV rates."""

    def __init__(self):
        self.vocabulary_ = None
        self.oov_rates_ = None

    def fit(self, docs):
        self.vocabulary_ = fit_vocabulary(docs)
        return self

    def transform(self, docs) -> np.ndarray:
        if self.vocabulary_ is None:
            raise RuntimeError("vectorizer is not fitted")
        vecs = [transform(d, self.vocabulary_) for d in docs]
        self.oov_rates_ = np.array([v.oov_rate for v in vecs])
        if not vecs:
            return np.zeros((0, len(self.vocabulary_)))
        return np.stack([v.weights for v in vecs])

    def fit_transform(self, docs) -> np.ndarray:
        return self.fit(docs).transform(docs)

    def get_params(self, deep=True) -> dict:
        return {}

    def set_params(self, **params):
        if params:
            raise ValueError(f"unknown parameters {sorted(params)}")
        return self


def save_vocabulary(vocab: Vocabulary, path) -> Path:
    path = Path(path)
    path.write_text("\n".join(vocab.tokens) + "\n")
    return path


def load_vocabulary(path) -> Vocabulary:
    lines = Path(path).read_text().splitlines()
    return Vocabulary(tuple(lines))


def save_matrix(matrix: np.ndarray, vocab: Vocabulary, path) -> Path:
    path = Path(path)
    rows = ["\t".join(vocab.tokens)]
    rows += ["\t".join(repr(float(x)) for x in row) for row in matrix]
    path.write_text("\n".join(rows) + "\n")
    return path


def load_matrix(path):
    lines = Path(path).read_text().splitlines()
    header = tuple(lines[0].split("\t"))
    data = [[float(x) for x in row.split("\t")] for row in lines[1:]]
    matrix = np.array(data, dtype=np.float64)
    if matrix.size == 0:
        matrix = matrix.reshape(0, len(header))
    return matrix, header
