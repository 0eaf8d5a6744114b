"""Greedy top-down decision trees over integer class targets.

Targets arrive as an (n, t) matrix of class indices, so one
implementation serves plain classification (t == 1) and direct
multi-output learning (one column per label, leaf histograms kept per
label).  A split is scored by the sum over targets and children of
(squared class counts) / (child size); maximizing that score is
algebraically the same as minimizing the weighted Gini impurity, but
it keeps the arithmetic exact in float64 for the dataset sizes handled
here.  Ties keep the lowest feature index, then the lowest threshold.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .base import DimensionMismatch, ParamsMixin, as_feature_matrix, as_target_matrix

THRESHOLD_MODES = ("exhaustive", "random")


@dataclass(frozen=True)
class TreeParams:
    max_depth: int | None = None
    min_leaf: int = 1
    feature_subsample: int | None = None
    threshold_mode: str = "exhaustive"
    feature_pool: int | None = None

    def __post_init__(self):
        if self.threshold_mode not in THRESHOLD_MODES:
            raise ValueError(f"unknown threshold mode {self.threshold_mode!r}")
        if self.min_leaf < 1:
            raise ValueError("min_leaf must be at least 1")


@dataclass(frozen=True, eq=False)
class Tree:
    """Flattened tree arrays; node 0 is the root, -1 marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    leaf_hist: tuple
    n_classes: tuple
    n_features: int
    _leaf_class: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        t = len(self.n_classes)
        classes = np.full((len(self.feature), t), -1, dtype=np.int64)
        for node, hists in enumerate(self.leaf_hist):
            if hists is None:
                continue
            for ti, counts in enumerate(hists):
                if sum(counts) == 0:
                    raise ValueError("empty leaf histogram")
                classes[node, ti] = int(np.argmax(counts))
        object.__setattr__(self, "_leaf_class", classes)

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index reached by every row."""
        cur = np.zeros(X.shape[0], dtype=np.int64)
        while True:
            live = np.nonzero(self.feature[cur] >= 0)[0]
            if live.size == 0:
                return cur
            node = cur[live]
            go_left = X[live, self.feature[node]] <= self.threshold[node]
            cur[live] = np.where(go_left, self.left[node], self.right[node])

    def predict(self, X: np.ndarray) -> np.ndarray:
        """Per-target majority class at the reached leaf, shape (n, t)."""
        return self._leaf_class[self.apply(X)]


def _node_counts(Y, rows, n_classes):
    return [np.bincount(Y[rows, t], minlength=c) for t, c in enumerate(n_classes)]


def _score_of(counts, size: float) -> float:
    total = 0.0
    for c in counts:
        total += float((c.astype(np.float64) ** 2).sum()) / size
    return total


def _split_exhaustive(x, Y_rows, n_classes, min_leaf):
    """Best midpoint on one feature column; None when no candidate."""
    n = x.shape[0]
    order = np.argsort(x, kind="stable")
    xs = x[order]
    bounds = np.nonzero(xs[1:] != xs[:-1])[0] + 1
    bounds = bounds[(bounds >= min_leaf) & (bounds <= n - min_leaf)]
    if bounds.size == 0:
        return None
    score = np.zeros(bounds.size, dtype=np.float64)
    for t, c in enumerate(n_classes):
        onehot = np.zeros((n, c), dtype=np.float64)
        onehot[np.arange(n), Y_rows[order, t]] = 1.0
        cum = np.cumsum(onehot, axis=0)
        left = cum[bounds - 1]
        right = cum[-1] - left
        score += (left ** 2).sum(axis=1) / bounds + (right ** 2).sum(axis=1) / (n - bounds)
    j = int(np.argmax(score))
    i = int(bounds[j])
    thr = float((xs[i - 1] + xs[i]) / 2.0)
    return float(score[j]), thr, order[:i], order[i:]


def _split_random(x, Y_rows, n_classes, min_leaf, rng):
    """One uniform threshold draw on one feature column."""
    lo = float(x.min())
    hi = float(x.max())
    thr = float(rng.uniform(lo, hi))
    mask = x <= thr
    nl = int(mask.sum())
    if nl < min_leaf or x.shape[0] - nl < min_leaf:
        return None
    score = 0.0
    for t, c in enumerate(n_classes):
        lc = np.bincount(Y_rows[mask, t], minlength=c)
        rc = np.bincount(Y_rows[~mask, t], minlength=c)
        score += _score_of([lc], float(nl)) + _score_of([rc], float(x.shape[0] - nl))
    left = np.nonzero(mask)[0]
    right = np.nonzero(~mask)[0]
    return score, thr, left, right


def _find_split(X, Y, rows, n_classes, counts, params, rng):
    n = rows.shape[0]
    pool = params.feature_pool if params.feature_pool is not None else X.shape[1]
    k = params.feature_subsample
    if k is None or k >= pool:
        feats = np.arange(pool)
    else:
        feats = np.sort(rng.choice(pool, size=k, replace=False))
    best = None
    best_score = _score_of(counts, float(n))
    Y_rows = Y[rows]
    for f in feats:
        x = X[rows, f]
        if params.threshold_mode == "exhaustive":
            cand = _split_exhaustive(x, Y_rows, n_classes, params.min_leaf)
        else:
            cand = _split_random(x, Y_rows, n_classes, params.min_leaf, rng)
        if cand is None:
            continue
        score, thr, li, ri = cand
        if score > best_score:
            best_score = score
            best = (int(f), thr, rows[li], rows[ri])
    return best


def _may_split(rows, depth, counts, params) -> bool:
    if rows.shape[0] < max(2, 2 * params.min_leaf):
        return False
    if params.max_depth is not None and depth >= params.max_depth:
        return False
    return any(int((c > 0).sum()) > 1 for c in counts)


def build_tree(X, Y, n_classes, params: TreeParams, rng) -> Tree:
    """Grow one tree; rng drives feature sampling and random thresholds."""
    feature, threshold, left, right, hist = [], [], [], [], []
    stack = [(np.arange(X.shape[0]), 0, -1, 0)]
    while stack:
        rows, depth, parent, side = stack.pop()
        idx = len(feature)
        if parent >= 0:
            (left if side == 0 else right)[parent] = idx
        counts = _node_counts(Y, rows, n_classes)
        split = None
        if _may_split(rows, depth, counts, params):
            split = _find_split(X, Y, rows, n_classes, counts, params, rng)
        if split is None:
            feature.append(-1)
            threshold.append(0.0)
            left.append(-1)
            right.append(-1)
            hist.append(tuple(tuple(int(v) for v in c) for c in counts))
        else:
            f, thr, rows_l, rows_r = split
            feature.append(f)
            threshold.append(thr)
            left.append(-1)
            right.append(-1)
            hist.append(None)
            stack.append((rows_r, depth + 1, idx, 1))
            stack.append((rows_l, depth + 1, idx, 0))
    return Tree(
        feature=np.array(feature, dtype=np.int64),
        threshold=np.array(threshold, dtype=np.float64),
        left=np.array(left, dtype=np.int64),
        right=np.array(right, dtype=np.int64),
        leaf_hist=tuple(hist),
        n_classes=tuple(n_classes),
        n_features=X.shape[1],
    )


class DecisionTree(ParamsMixin):
    """Single tree estimator with sklearn-style fit and predict."""

    def __init__(self, max_depth=None, min_leaf=1, feature_subsample=None,
                 threshold_mode="exhaustive", seed=0, feature_pool=None):
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.feature_subsample = feature_subsample
        self.threshold_mode = threshold_mode
        self.seed = seed
        self.feature_pool = feature_pool

    def fit(self, X, y):
        X = as_feature_matrix(X)
        Y, single = as_target_matrix(y)
        if Y.shape[0] != X.shape[0]:
            raise ValueError("row counts disagree")
        n_classes = tuple(int(Y[:, t].max()) + 1 for t in range(Y.shape[1]))
        params = TreeParams(self.max_depth, self.min_leaf, self.feature_subsample,
                            self.threshold_mode, self.feature_pool)
        rng = np.random.default_rng(self.seed)
        self.tree_ = build_tree(X, Y, n_classes, params, rng)
        self.n_features_ = X.shape[1]
        self.n_classes_ = n_classes
        self._single = single
        return self

    def predict(self, X):
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features_:
            raise DimensionMismatch(
                f"expected {self.n_features_} features, got {X.shape[1] if X.ndim == 2 else 'non-2D'}")
        out = self.tree_.predict(X)
        return out[:, 0] if self._single else out
