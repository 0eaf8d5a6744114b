"""Shared plumbing for the tree learners: errors, seeding, datasets."""

from __future__ import annotations

import hashlib
import inspect
from dataclasses import dataclass

import numpy as np


class EmptyDataset(ValueError):
    """Raised when fitting is attempted on zero rows."""


class DimensionMismatch(ValueError):
    """Raised when a feature matrix does not match the trained shape."""


class FingerprintMismatch(ValueError):
    """Raised when a stored model was trained against a different vocabulary."""


def derive_seed(*parts) -> int:
    """Positional seed derivation: a 64-bit integer from named parts.

    Used everywhere a component needs an independent RNG stream, so
    training order and parallel scheduling can never change results.
    """
    payload = "\x1f".join(str(p) for p in parts).encode()
    return int.from_bytes(hashlib.sha256(payload).digest()[:8], "big")


class ParamsMixin:
    """Constructor-parameter introspection in the sklearn style."""

    def get_params(self) -> dict:
        names = [p for p in inspect.signature(type(self).__init__).parameters
                 if p != "self"]
        return {name: getattr(self, name) for name in names}

    def set_params(self, **params):
        known = self.get_params()
        for key, value in params.items():
            if key not in known:
                raise ValueError(f"unknown parameter {key!r}")
            setattr(self, key, value)
        return self


@dataclass(frozen=True)
class Dataset:
    """Feature rows paired with labels and functionality groups.

    ``labelsets`` holds one frozenset of label names per row for
    multi-label data, or one plain string per row for single-label
    data.  ``label_names`` is the declared finite label set and fixes
    the column order used by :func:`label_matrix`.
    """

    features: np.ndarray
    labelsets: tuple
    groups: tuple
    label_names: tuple

    def __post_init__(self):
        n = len(self.features)
        if len(self.labelsets) != n or len(self.groups) != n:
            raise ValueError("feature, label, and group row counts disagree")
        known = set(self.label_names)
        for entry in self.labelsets:
            got = entry if isinstance(entry, frozenset) else frozenset((entry,))
            stray = got - known
            if stray:
                raise ValueError(f"labels outside the declared set: {sorted(stray)}")

    @property
    def n_rows(self) -> int:
        return len(self.features)


def label_matrix(dataset: Dataset) -> np.ndarray:
    """Multi-label rows as a 0/1 matrix, one column per label name."""
    index = {name: j for j, name in enumerate(dataset.label_names)}
    out = np.zeros((dataset.n_rows, len(dataset.label_names)), dtype=np.int64)
    for i, entry in enumerate(dataset.labelsets):
        for name in entry:
            out[i, index[name]] = 1
    return out


def class_vector(dataset: Dataset) -> np.ndarray:
    """Single-label rows as a vector of class indices into label_names."""
    index = {name: j for j, name in enumerate(dataset.label_names)}
    return np.array([index[entry] for entry in dataset.labelsets], dtype=np.int64)


def as_feature_matrix(X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("feature matrix must be 2-D")
    if X.shape[0] == 0:
        raise EmptyDataset("no rows to fit")
    return X


def as_target_matrix(y) -> tuple[np.ndarray, bool]:
    """Targets as an (n, t) int matrix plus a flag for 1-D input."""
    y = np.asarray(y)
    single = y.ndim == 1
    if single:
        y = y[:, None]
    if y.ndim != 2:
        raise ValueError("targets must be 1-D or 2-D")
    if not np.issubdtype(y.dtype, np.integer):
        raise ValueError("targets must be integer class indices")
    if (y < 0).any():
        raise ValueError("negative class index")
    return y.astype(np.int64), single
