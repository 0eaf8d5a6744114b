"""Random forests, extremely randomized trees, and hard voting.

A random forest bootstraps each tree's rows (same size, with
replacement) and searches exhaustive midpoint thresholds on a sqrt
sized feature subset per split.  Extra trees keep the full sample and
draw one uniform threshold per sampled feature instead.  Per-tree
seeds derive positionally from the master seed, so parallel training
could never reorder results.

Votes are hard everywhere: a tree votes the majority class of its
leaf, a forest takes the majority over its trees, an ensemble the
majority over member forests.  Every tie breaks toward the lowest
class index.
"""

from __future__ import annotations

import math

import numpy as np

from .base import (DimensionMismatch, ParamsMixin, as_feature_matrix,
                   as_target_matrix, derive_seed)
from .tree import TreeParams, build_tree

FOREST_KINDS = ("random_forest", "extra_trees")


def resolve_subsample(feature_subsample, pool: int) -> int | None:
    """Per-split candidate count: "sqrt", an explicit int, or None for all."""
    if feature_subsample is None:
        return None
    if feature_subsample == "sqrt":
        return max(1, math.isqrt(pool))
    if isinstance(feature_subsample, int) and feature_subsample >= 1:
        return min(feature_subsample, pool)
    raise ValueError(f"bad feature_subsample {feature_subsample!r}")


def majority_vote(votes: np.ndarray, n_classes: int):
    """Row-wise majority over voter columns; ties take the lowest class.

    Returns the winning class per row and the vote share per class.
    """
    n, members = votes.shape
    counts = np.zeros((n, n_classes), dtype=np.int64)
    rows = np.arange(n)
    for j in range(members):
        counts[rows, votes[:, j]] += 1
    return counts.argmax(axis=1), counts / members


class _ForestBase(ParamsMixin):
    kind = ""
    _bootstrap = False
    _threshold_mode = ""

    def __init__(self, n_trees=100, max_depth=None, min_leaf=1,
                 feature_subsample="sqrt", seed=0, feature_pool=None):
        if n_trees < 1:
            raise ValueError("n_trees must be at least 1")
        self.n_trees = n_trees
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.feature_subsample = feature_subsample
        self.seed = seed
        self.feature_pool = feature_pool

    def fit(self, X, y, n_classes=None):
        X = as_feature_matrix(X)
        Y, single = as_target_matrix(y)
        if Y.shape[0] != X.shape[0]:
            raise ValueError("row counts disagree")
        if n_classes is None:
            n_classes = tuple(int(Y[:, t].max()) + 1 for t in range(Y.shape[1]))
        elif isinstance(n_classes, int):
            n_classes = (n_classes,) * Y.shape[1]
        else:
            n_classes = tuple(int(c) for c in n_classes)
        pool = self.feature_pool if self.feature_pool is not None else X.shape[1]
        params = TreeParams(
            max_depth=self.max_depth,
            min_leaf=self.min_leaf,
            feature_subsample=resolve_subsample(self.feature_subsample, pool),
            threshold_mode=self._threshold_mode,
            feature_pool=self.feature_pool,
        )
        n = X.shape[0]
        trees = []
        for i in range(self.n_trees):
            boot_rng = np.random.default_rng(derive_seed(self.seed, "tree", i, "boot"))
            if self._bootstrap:
                rows = boot_rng.integers(0, n, size=n)
            else:
                rows = np.arange(n)
            build_rng = np.random.default_rng(derive_seed(self.seed, "tree", i, "build"))
            trees.append(build_tree(X[rows], Y[rows], n_classes, params, build_rng))
        self.trees_ = tuple(trees)
        self.n_features_ = X.shape[1]
        self.n_classes_ = n_classes
        self._single = single
        return self

    def _check_input(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features_:
            raise DimensionMismatch(
                f"expected {self.n_features_} features, got "
                f"{X.shape[1] if X.ndim == 2 else 'non-2D'}")
        return X

    def _vote_counts(self, X):
        """Per-target (n, classes) tree-vote counts."""
        X = self._check_input(X)
        n = X.shape[0]
        counts = [np.zeros((n, c), dtype=np.int64) for c in self.n_classes_]
        rows = np.arange(n)
        for tree in self.trees_:
            votes = tree.predict(X)
            for t in range(len(self.n_classes_)):
                counts[t][rows, votes[:, t]] += 1
        return counts

    def predict(self, X):
        counts = self._vote_counts(X)
        out = np.stack([c.argmax(axis=1) for c in counts], axis=1)
        return out[:, 0] if self._single else out

    def vote_shares(self, X):
        """Per-class tree-vote shares; a tuple of arrays for multi-output."""
        counts = self._vote_counts(X)
        shares = tuple(c / self.n_trees for c in counts)
        return shares[0] if self._single else shares


class RandomForest(_ForestBase):
    """Bootstrap rows, exhaustive midpoint thresholds."""

    kind = "random_forest"
    _bootstrap = True
    _threshold_mode = "exhaustive"


class ExtraTrees(_ForestBase):
    """Full sample, one random threshold per sampled feature."""

    kind = "extra_trees"
    _bootstrap = False
    _threshold_mode = "random"


class VotingEnsemble(ParamsMixin):
    """Hard vote over one random forest and one extra-trees forest.

    Each member is internally majority-voted over its own trees; the
    ensemble then votes over member predictions, ties toward the
    lowest class index.  With the two stock members, disagreement
    therefore resolves to the lower class.
    """

    def __init__(self, n_trees=100, max_depth=None, min_leaf=1,
                 feature_subsample="sqrt", seed=0, feature_pool=None):
        self.n_trees = n_trees
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.feature_subsample = feature_subsample
        self.seed = seed
        self.feature_pool = feature_pool

    def _make_member(self, cls, index: int):
        return cls(n_trees=self.n_trees, max_depth=self.max_depth,
                   min_leaf=self.min_leaf, feature_subsample=self.feature_subsample,
                   seed=derive_seed(self.seed, "member", index),
                   feature_pool=self.feature_pool)

    def fit(self, X, y, n_classes=None):
        X = as_feature_matrix(X)
        y = np.asarray(y)
        if n_classes is None:
            if np.unique(y).size < 2:
                raise ValueError("need at least 2 distinct classes")
            n_classes = int(y.max()) + 1
        members = [self._make_member(RandomForest, 0),
                   self._make_member(ExtraTrees, 1)]
        for member in members:
            member.fit(X, y, n_classes=(n_classes,))
        self.members_ = members
        self.n_features_ = X.shape[1]
        self.n_classes_ = int(n_classes)
        return self

    def predict(self, X):
        votes = np.stack([m.predict(X) for m in self.members_], axis=1)
        winner, _ = majority_vote(votes, self.n_classes_)
        return winner

    def member_predictions(self, X):
        return tuple(m.predict(X) for m in self.members_)
