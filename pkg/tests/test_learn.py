"""Tree and forest behavior, checked against brute-force oracles."""

from collections import Counter
from fractions import Fraction

import numpy as np
import pytest

from obfscan.learn import (DecisionTree, DimensionMismatch, EmptyDataset,
                           ExtraTrees, RandomForest, Tree, VotingEnsemble,
                           derive_seed, majority_vote, resolve_subsample)


def brute_force_split(X, y, min_leaf=1):
    """Scan every (feature, midpoint) candidate and return the winner.

    Maximizes sum(count^2)/size over both children, which is the same
    ranking as minimizing weighted Gini impurity.  Ties keep the lowest
    feature index, then the lowest threshold.  Returns None when no
    candidate beats the unsplit score.
    """
    n, d = X.shape
    total = Counter(int(v) for v in y)
    best = None
    best_score = sum(c * c for c in total.values()) / n
    for f in range(d):
        order = sorted(range(n), key=lambda i: X[i, f])
        left = Counter()
        for i in range(1, n):
            left[int(y[order[i - 1]])] += 1
            if X[order[i - 1], f] == X[order[i], f]:
                continue
            if i < min_leaf or i > n - min_leaf:
                continue
            sql = sum(c * c for c in left.values())
            sqr = sum((total[k] - left.get(k, 0)) ** 2 for k in total)
            score = sql / i + sqr / (n - i)
            if score > best_score:
                best_score = score
                best = (f, float((X[order[i - 1], f] + X[order[i], f]) / 2.0))
    return best


def blob_data(seed=0, n=60, d=4, spread=0.5):
    rng = np.random.default_rng(seed)
    lo = rng.normal(0.0, spread, size=(n // 2, d))
    hi = rng.normal(8.0, spread, size=(n - n // 2, d))
    X = np.vstack([lo, hi])
    y = np.array([0] * (n // 2) + [1] * (n - n // 2), dtype=np.int64)
    return X, y


def leaf_tree(counts, n_features=1):
    return Tree(
        feature=np.array([-1]), threshold=np.array([0.0]),
        left=np.array([-1]), right=np.array([-1]),
        leaf_hist=((tuple(counts),),),
        n_classes=(len(counts),), n_features=n_features)


def forest_of(trees, n_classes=2):
    shell = RandomForest(n_trees=len(trees))
    shell.trees_ = tuple(trees)
    shell.n_features_ = trees[0].n_features
    shell.n_classes_ = (n_classes,)
    shell._single = True
    return shell


def test_perfect_split_gives_two_pure_leaves():
    X = np.array([[0.0], [0.0], [1.0], [1.0]])
    y = np.array([0, 0, 1, 1])
    model = DecisionTree().fit(X, y)
    t = model.tree_
    assert t.n_nodes == 3
    assert t.feature[0] == 0 and t.threshold[0] == 0.5
    hists = [h for h in t.leaf_hist if h is not None]
    assert sorted(hists) == [((0, 2),), ((2, 0),)]
    assert np.array_equal(model.predict(X), y)


def test_constant_class_trains_a_single_leaf():
    X = np.arange(10, dtype=float).reshape(5, 2)
    y = np.array([3, 3, 3, 3, 3])
    model = DecisionTree().fit(X, y)
    assert model.tree_.n_nodes == 1
    assert np.array_equal(model.predict(X), y)


def test_exhaustive_root_split_matches_brute_force_enumeration():
    rng = np.random.default_rng(1234)
    for trial in range(50):
        n = int(rng.integers(5, 201))
        d = int(rng.integers(1, 21))
        if trial % 2:
            X = rng.normal(size=(n, d))
        else:
            X = rng.integers(0, 6, size=(n, d)).astype(np.float64)
        y = rng.integers(0, int(rng.integers(2, 5)), size=n).astype(np.int64)
        min_leaf = int(rng.choice([1, 2, 5]))
        model = DecisionTree(max_depth=1, min_leaf=min_leaf).fit(X, y)
        expected = brute_force_split(X, y, min_leaf)
        if expected is None:
            assert model.tree_.feature[0] == -1
        else:
            got = (int(model.tree_.feature[0]), float(model.tree_.threshold[0]))
            assert got == expected, f"trial {trial}"


def _assert_monotone_purity(tree, X, y, n_classes):
    def gini(rows):
        counts = np.bincount(y[rows], minlength=n_classes)
        n = len(rows)
        return 1 - sum(Fraction(int(c) * int(c), n * n) for c in counts)

    def rec(node, rows):
        if tree.feature[node] < 0:
            return
        mask = X[rows, tree.feature[node]] <= tree.threshold[node]
        lrows, rrows = rows[mask], rows[~mask]
        assert len(lrows) and len(rrows)
        weighted = (Fraction(len(lrows), len(rows)) * gini(lrows)
                    + Fraction(len(rrows), len(rows)) * gini(rrows))
        assert weighted <= gini(rows)
        rec(tree.left[node], lrows)
        rec(tree.right[node], rrows)

    rec(0, np.arange(len(X)))


@pytest.mark.parametrize("mode", ["exhaustive", "random"])
def test_accepted_splits_never_raise_impurity(mode):
    rng = np.random.default_rng(77)
    X = rng.integers(0, 8, size=(120, 6)).astype(np.float64)
    y = rng.integers(0, 3, size=120).astype(np.int64)
    model = DecisionTree(threshold_mode=mode, seed=5, feature_subsample=3).fit(X, y)
    _assert_monotone_purity(model.tree_, X, y, 3)


def test_min_leaf_bounds_every_leaf():
    rng = np.random.default_rng(9)
    X = rng.normal(size=(80, 5))
    y = rng.integers(0, 2, size=80).astype(np.int64)
    model = DecisionTree(min_leaf=7).fit(X, y)
    for h in model.tree_.leaf_hist:
        if h is not None:
            assert sum(h[0]) >= 7


def test_multi_target_tree_predicts_both_columns():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(100, 4))
    Y = np.stack([(X[:, 0] > 0).astype(np.int64),
                  (X[:, 1] > 0).astype(np.int64)], axis=1)
    model = DecisionTree().fit(X, Y)
    assert np.array_equal(model.predict(X), Y)


def test_empty_dataset_is_rejected():
    with pytest.raises(EmptyDataset):
        DecisionTree().fit(np.zeros((0, 3)), np.zeros(0, dtype=np.int64))


def test_predict_rejects_wrong_width():
    X, y = blob_data()
    model = RandomForest(n_trees=3, seed=1).fit(X, y)
    with pytest.raises(DimensionMismatch):
        model.predict(np.zeros((2, X.shape[1] + 1)))


def test_single_tree_forest_equals_tree_on_its_bootstrap():
    rng = np.random.default_rng(21)
    X = rng.normal(size=(50, 6))
    y = rng.integers(0, 3, size=50).astype(np.int64)
    forest = RandomForest(n_trees=1, seed=7).fit(X, y)
    boot_rng = np.random.default_rng(derive_seed(7, "tree", 0, "boot"))
    rows = boot_rng.integers(0, 50, size=50)
    alone = DecisionTree(
        feature_subsample=resolve_subsample("sqrt", 6),
        seed=derive_seed(7, "tree", 0, "build")).fit(X[rows], y[rows])
    probe = rng.normal(size=(40, 6))
    assert np.array_equal(forest.predict(probe), alone.predict(probe))


@pytest.mark.parametrize("cls", [RandomForest, ExtraTrees])
def test_retraining_with_same_seed_is_identical(cls):
    X, y = blob_data(seed=4, n=80)
    probe = np.random.default_rng(8).normal(4.0, 3.0, size=(60, X.shape[1]))
    a = cls(n_trees=9, seed=13).fit(X, y).predict(probe)
    b = cls(n_trees=9, seed=13).fit(X, y).predict(probe)
    assert np.array_equal(a, b)


@pytest.mark.parametrize("cls", [RandomForest, ExtraTrees])
def test_separable_blobs_reach_full_training_accuracy(cls):
    X, y = blob_data(seed=2, n=100)
    model = cls(n_trees=50, seed=0).fit(X, y)
    assert np.array_equal(model.predict(X), y)


def test_forest_kind_flags():
    assert RandomForest._bootstrap and RandomForest._threshold_mode == "exhaustive"
    assert not ExtraTrees._bootstrap and ExtraTrees._threshold_mode == "random"


def test_majority_vote_fixtures():
    winner, shares = majority_vote(np.array([[0, 0, 1]]), 2)
    assert winner[0] == 0
    assert np.array_equal(shares, np.array([[2 / 3, 1 / 3]]))
    winner, _ = majority_vote(np.array([[0, 1]]), 2)
    assert winner[0] == 0
    winner, _ = majority_vote(np.array([[0, 1, 1]]), 2)
    assert winner[0] == 1


def test_crafted_forest_votes_and_shares():
    trees = [leaf_tree([5, 1]), leaf_tree([3, 0]), leaf_tree([0, 2])]
    forest = forest_of(trees)
    X = np.zeros((2, 1))
    assert np.array_equal(forest.predict(X), np.array([0, 0]))
    shares = forest.vote_shares(X)
    assert np.array_equal(shares, np.array([[2 / 3, 1 / 3]] * 2))


def test_single_leaf_tree_predicts_constantly():
    forest = forest_of([leaf_tree([0, 4])])
    X = np.array([[-100.0], [0.0], [100.0]])
    assert np.array_equal(forest.predict(X), np.array([1, 1, 1]))


def test_voting_tie_takes_the_lowest_class_index():
    ve = VotingEnsemble()
    ve.members_ = [forest_of([leaf_tree([1, 0])]), forest_of([leaf_tree([0, 1])])]
    ve.n_classes_ = 2
    ve.n_features_ = 1
    assert np.array_equal(ve.predict(np.zeros((3, 1))), np.array([0, 0, 0]))


def test_three_member_vote_takes_the_majority():
    ve = VotingEnsemble()
    ve.members_ = [forest_of([leaf_tree([1, 0])]),
                   forest_of([leaf_tree([0, 1])]),
                   forest_of([leaf_tree([0, 1])])]
    ve.n_classes_ = 2
    ve.n_features_ = 1
    assert np.array_equal(ve.predict(np.zeros((2, 1))), np.array([1, 1]))


def test_vote_output_is_always_a_member_prediction():
    rng = np.random.default_rng(31)
    X = rng.normal(size=(90, 5))
    y = rng.integers(0, 3, size=90).astype(np.int64)
    ve = VotingEnsemble(n_trees=5, seed=3).fit(X, y)
    probe = rng.normal(size=(50, 5))
    combined = ve.predict(probe)
    members = np.stack(ve.member_predictions(probe), axis=1)
    assert all(combined[i] in members[i] for i in range(len(probe)))


def test_trained_ensemble_separates_blobs():
    X, y = blob_data(seed=6, n=80)
    ve = VotingEnsemble(n_trees=10, seed=1).fit(X, y)
    assert np.array_equal(ve.predict(X), y)


def test_one_class_data_is_rejected_without_explicit_classes():
    X = np.arange(12, dtype=float).reshape(6, 2)
    y = np.zeros(6, dtype=np.int64)
    with pytest.raises(ValueError, match="2 distinct classes"):
        VotingEnsemble(n_trees=2).fit(X, y)
    VotingEnsemble(n_trees=2).fit(X, y, n_classes=2)


def test_resolve_subsample_rules():
    assert resolve_subsample("sqrt", 9) == 3
    assert resolve_subsample("sqrt", 1) == 1
    assert resolve_subsample(None, 9) is None
    assert resolve_subsample(4, 9) == 4
    assert resolve_subsample(40, 9) == 9
    with pytest.raises(ValueError):
        resolve_subsample("log2", 9)


def test_params_round_trip_and_unknown_rejection():
    model = RandomForest(n_trees=5, seed=2)
    params = model.get_params()
    assert params["n_trees"] == 5 and params["seed"] == 2
    model.set_params(n_trees=7)
    assert model.n_trees == 7
    with pytest.raises(ValueError, match="unknown parameter"):
        model.set_params(bogus=1)
