"""Multi-label detectors: classifier chains, binary relevance, and
direct multi-output forests.

All four models share one output convention: ``predict`` returns a
0/1 matrix with one column per declared label, and ``predict_labels``
turns each row into a frozenset of label names, mapping the empty set
to the configured clean marker.
"""

from __future__ import annotations

import numpy as np

from .base import ParamsMixin, as_feature_matrix, derive_seed
from .forest import ExtraTrees, RandomForest, VotingEnsemble


LINK_KINDS = ("voting", "random_forest", "extra_trees")


def _make_link(link_kind: str, **params):
    if link_kind == "voting":
        return VotingEnsemble(**params)
    cls = RandomForest if link_kind == "random_forest" else ExtraTrees
    return cls(**params)


def _check_bits(Y, n_labels: int) -> np.ndarray:
    Y = np.asarray(Y)
    if Y.ndim != 2 or Y.shape[1] != n_labels:
        raise ValueError(f"expected a (rows, {n_labels}) label matrix")
    if not np.isin(Y, (0, 1)).all():
        raise ValueError("label matrix must be 0/1")
    return Y.astype(np.int64)


class _SetOutputMixin:
    def predict_labels(self, X) -> list:
        bits = self.predict(X)
        names = self.labels
        out = []
        for row in bits:
            present = frozenset(names[j] for j in np.nonzero(row)[0])
            out.append(present if present else frozenset((self.clean_label,)))
        return out


class ClassifierChain(ParamsMixin, _SetOutputMixin):
    """Chained binary ensembles over a seeded random label order.

    Link i is trained on the base features plus the true bits of the
    i previous labels in chain order (teacher forcing); prediction
    feeds each link the bits predicted so far instead.  With
    ``use_chain_features=False`` every split is restricted to the base
    feature columns, which makes the chain predict exactly like
    independent per-label ensembles under the same seeds.
    """

    def __init__(self, labels, n_trees=100, max_depth=None, min_leaf=1,
                 feature_subsample="sqrt", seed=0, use_chain_features=True,
                 link_kind="voting", clean_label="Clean"):
        if len(labels) < 1:
            raise ValueError("need at least one label")
        if link_kind not in LINK_KINDS:
            raise ValueError(f"unknown link kind {link_kind!r}")
        self.labels = tuple(labels)
        self.n_trees = n_trees
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.feature_subsample = feature_subsample
        self.seed = seed
        self.use_chain_features = use_chain_features
        self.link_kind = link_kind
        self.clean_label = clean_label

    def _link(self, position: int, base_dim: int):
        return _make_link(
            self.link_kind, n_trees=self.n_trees, max_depth=self.max_depth,
            min_leaf=self.min_leaf, feature_subsample=self.feature_subsample,
            seed=derive_seed(self.seed, "link", position),
            feature_pool=None if self.use_chain_features else base_dim)

    def fit(self, X, Y):
        X = as_feature_matrix(X)
        Y = _check_bits(Y, len(self.labels))
        order = np.arange(len(self.labels))
        np.random.default_rng(derive_seed(self.seed, "order")).shuffle(order)
        self.order_ = tuple(int(i) for i in order)
        feats = X
        links = []
        for pos, label_index in enumerate(self.order_):
            link = self._link(pos, X.shape[1])
            link.fit(feats, Y[:, label_index], n_classes=2)
            links.append(link)
            feats = np.hstack([feats, Y[:, label_index:label_index + 1].astype(np.float64)])
        self.links_ = tuple(links)
        self.n_features_ = X.shape[1]
        return self

    def predict(self, X):
        X = np.asarray(X, dtype=np.float64)
        bits = np.zeros((X.shape[0], len(self.labels)), dtype=np.int64)
        feats = X
        for pos, label_index in enumerate(self.order_):
            p = self.links_[pos].predict(feats)
            bits[:, label_index] = p
            feats = np.hstack([feats, p[:, None].astype(np.float64)])
        return bits


class BinaryRelevance(ParamsMixin, _SetOutputMixin):
    """One independent binary ensemble per label, in declared order."""

    def __init__(self, labels, n_trees=100, max_depth=None, min_leaf=1,
                 feature_subsample="sqrt", seed=0, link_kind="voting",
                 clean_label="Clean"):
        if len(labels) < 1:
            raise ValueError("need at least one label")
        if link_kind not in LINK_KINDS:
            raise ValueError(f"unknown link kind {link_kind!r}")
        self.labels = tuple(labels)
        self.n_trees = n_trees
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.feature_subsample = feature_subsample
        self.seed = seed
        self.link_kind = link_kind
        self.clean_label = clean_label

    def fit(self, X, Y):
        X = as_feature_matrix(X)
        Y = _check_bits(Y, len(self.labels))
        links = []
        for j in range(len(self.labels)):
            link = _make_link(
                self.link_kind, n_trees=self.n_trees, max_depth=self.max_depth,
                min_leaf=self.min_leaf, feature_subsample=self.feature_subsample,
                seed=derive_seed(self.seed, "link", j))
            link.fit(X, Y[:, j], n_classes=2)
            links.append(link)
        self.links_ = tuple(links)
        self.n_features_ = X.shape[1]
        return self

    def predict(self, X):
        X = np.asarray(X, dtype=np.float64)
        cols = [link.predict(X) for link in self.links_]
        return np.stack(cols, axis=1)


class MultiOutputForest(ParamsMixin, _SetOutputMixin):
    """One forest whose leaves keep a histogram per label."""

    def __init__(self, labels, kind="random_forest", n_trees=100, max_depth=None,
                 min_leaf=1, feature_subsample="sqrt", seed=0, clean_label="Clean"):
        if len(labels) < 1:
            raise ValueError("need at least one label")
        if kind not in ("random_forest", "extra_trees"):
            raise ValueError(f"unknown forest kind {kind!r}")
        self.labels = tuple(labels)
        self.kind = kind
        self.n_trees = n_trees
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.feature_subsample = feature_subsample
        self.seed = seed
        self.clean_label = clean_label

    def _forest(self, seed: int):
        cls = RandomForest if self.kind == "random_forest" else ExtraTrees
        return cls(n_trees=self.n_trees, max_depth=self.max_depth,
                   min_leaf=self.min_leaf, feature_subsample=self.feature_subsample,
                   seed=seed)

    def fit(self, X, Y):
        X = as_feature_matrix(X)
        Y = _check_bits(Y, len(self.labels))
        self.forest_ = self._forest(self.seed)
        self.forest_.fit(X, Y, n_classes=(2,) * len(self.labels))
        self.n_features_ = X.shape[1]
        return self

    def predict(self, X):
        return self.forest_.predict(X)


class MultiOutputVoting(ParamsMixin, _SetOutputMixin):
    """Per-label hard vote over one random forest and one extra-trees
    forest, both trained directly on the full label matrix."""

    def __init__(self, labels, n_trees=100, max_depth=None, min_leaf=1,
                 feature_subsample="sqrt", seed=0, clean_label="Clean"):
        if len(labels) < 1:
            raise ValueError("need at least one label")
        self.labels = tuple(labels)
        self.n_trees = n_trees
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.feature_subsample = feature_subsample
        self.seed = seed
        self.clean_label = clean_label

    def fit(self, X, Y):
        X = as_feature_matrix(X)
        Y = _check_bits(Y, len(self.labels))
        members = []
        for index, kind in enumerate(("random_forest", "extra_trees")):
            member = MultiOutputForest(
                self.labels, kind=kind, n_trees=self.n_trees,
                max_depth=self.max_depth, min_leaf=self.min_leaf,
                feature_subsample=self.feature_subsample,
                seed=derive_seed(self.seed, "member", index),
                clean_label=self.clean_label)
            member.fit(X, Y)
            members.append(member)
        self.members_ = tuple(members)
        self.n_features_ = X.shape[1]
        return self

    def predict(self, X):
        stacked = np.stack([m.predict(X) for m in self.members_], axis=2)
        counts_one = stacked.sum(axis=2)
        # tie toward the lower class: positive only on a strict majority
        return (counts_one * 2 > stacked.shape[2]).astype(np.int64)
