"""Fold planning for the two evaluation regimes.

Standard mode stratifies on the full label signature of each row, so
every fold sees roughly the same label mix.  Grouped mode assigns
whole functionality tags to folds instead: a fold's test rows share
no tag with its training rows, which measures whether a model learned
the transformations rather than the underlying programs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..learn.base import Dataset, derive_seed

FOLD_MODES = ("standard_stratified", "functionality_grouped")


class TooFewGroups(ValueError):
    """Grouped folding needs at least k distinct functionality tags."""


@dataclass(frozen=True)
class FoldPlan:
    k: int
    assignment: tuple
    mode: str
    seed: int

    def __post_init__(self):
        if self.mode not in FOLD_MODES:
            raise ValueError(f"unknown fold mode {self.mode!r}")
        used = set(self.assignment)
        if any(f < 0 or f >= self.k for f in used):
            raise ValueError("fold index out of range")
        if used != set(range(self.k)):
            raise ValueError("every fold must receive at least one row")

    def test_rows(self, fold: int) -> np.ndarray:
        return np.array([i for i, f in enumerate(self.assignment) if f == fold],
                        dtype=np.int64)

    def train_rows(self, fold: int) -> np.ndarray:
        return np.array([i for i, f in enumerate(self.assignment) if f != fold],
                        dtype=np.int64)


def _signature_key(entry) -> str:
    if isinstance(entry, frozenset):
        return "+".join(sorted(entry)) if entry else ""
    return str(entry)


def _stratified(dataset: Dataset, k: int, rng) -> list:
    buckets: dict = {}
    for i, entry in enumerate(dataset.labelsets):
        buckets.setdefault(_signature_key(entry), []).append(i)
    assign = [0] * dataset.n_rows
    cursor = 0
    for key in sorted(buckets):
        rows = np.array(buckets[key])
        rng.shuffle(rows)
        # consecutive slots modulo k: big signatures split evenly,
        # rare ones walk round-robin across folds
        for offset, row in enumerate(rows):
            assign[int(row)] = (cursor + offset) % k
        cursor = (cursor + len(rows)) % k
    return assign


def _grouped(dataset: Dataset, k: int, rng) -> list:
    tags: dict = {}
    for i, tag in enumerate(dataset.groups):
        tags.setdefault(tag, []).append(i)
    if len(tags) < k:
        raise TooFewGroups(f"need at least {k} distinct tags, got {len(tags)}")
    names = sorted(tags)
    order = np.arange(len(names))
    rng.shuffle(order)
    shuffled = [names[int(i)] for i in order]
    # greedy balanced bin-packing: heaviest tags first, each into the
    # currently lightest fold; the shuffle above breaks count ties
    shuffled.sort(key=lambda t: -len(tags[t]))
    loads = [0] * k
    assign = [0] * dataset.n_rows
    for tag in shuffled:
        fold = min(range(k), key=lambda f: (loads[f], f))
        loads[fold] += len(tags[tag])
        for row in tags[tag]:
            assign[row] = fold
    return assign


def make_folds(dataset: Dataset, mode: str, k: int = 10, seed: int = 0) -> FoldPlan:
    if k < 2:
        raise ValueError("k must be at least 2")
    if mode not in FOLD_MODES:
        raise ValueError(f"unknown fold mode {mode!r}")
    if dataset.n_rows < k:
        raise ValueError("fewer rows than folds")
    rng = np.random.default_rng(derive_seed(seed, "folds", mode, k))
    if mode == "standard_stratified":
        assign = _stratified(dataset, k, rng)
    else:
        assign = _grouped(dataset, k, rng)
    plan = FoldPlan(k=k, assignment=tuple(assign), mode=mode, seed=seed)
    if mode == "functionality_grouped":
        assert_no_group_leakage(plan, dataset)
    return plan


def assert_no_group_leakage(plan: FoldPlan, dataset: Dataset) -> None:
    """Every fold's test tags must be disjoint from its train tags."""
    for fold in range(plan.k):
        test = {dataset.groups[int(i)] for i in plan.test_rows(fold)}
        train = {dataset.groups[int(i)] for i in plan.train_rows(fold)}
        shared = test & train
        if shared:
            raise AssertionError(
                f"fold {fold} leaks tags across train/test: {sorted(shared)}")
