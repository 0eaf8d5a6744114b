"""Confusion counting and the metric suite.

Every reported number is a mean over per-fold values, and the raw
per-fold confusion counts stay inside the report so any metric can be
recomputed exactly.  Multi-label overall accuracy is reported twice:
exact-match (the whole label set must be right) and per-label mean
(average over per-label binary accuracies); exact-match is never the
larger of the two.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def compute_f1(tp: int, fp: int, fn: int) -> tuple:
    """Precision, recall, F1 from counts; 0/0 cases resolve to 0."""
    if min(tp, fp, fn) < 0:
        raise ValueError("negative confusion count")
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


@dataclass(frozen=True)
class FoldCounts:
    """Raw confusion for one fold.

    per_label holds one (tp, fp, fn, tn) tuple per label name; for
    single-label data these are one-vs-rest counts and ``matrix`` adds
    the full confusion matrix (true class by predicted class).
    """

    n_rows: int
    exact_hits: int
    per_label: tuple
    matrix: tuple = None
    seconds: float = 0.0

    def __post_init__(self):
        if self.n_rows < 1:
            raise ValueError("a fold must hold at least one row")
        if not 0 <= self.exact_hits <= self.n_rows:
            raise ValueError("exact hits out of range")
        for tp, fp, fn, tn in self.per_label:
            if min(tp, fp, fn, tn) < 0 or tp + fp + fn + tn != self.n_rows:
                raise ValueError("per-label counts must total the fold size")

    def exact_match(self) -> float:
        return self.exact_hits / self.n_rows

    def label_accuracy(self, j: int) -> float:
        tp, fp, fn, tn = self.per_label[j]
        return (tp + tn) / self.n_rows

    def per_label_mean(self) -> float:
        return sum(self.label_accuracy(j) for j in range(len(self.per_label))) / len(self.per_label)


def count_multilabel(truth: np.ndarray, pred: np.ndarray, seconds: float = 0.0) -> FoldCounts:
    """Confusion for 0/1 label matrices of the same shape."""
    if truth.shape != pred.shape:
        raise ValueError("shape mismatch")
    n = truth.shape[0]
    per_label = []
    for j in range(truth.shape[1]):
        t, p = truth[:, j], pred[:, j]
        tp = int(((t == 1) & (p == 1)).sum())
        fp = int(((t == 0) & (p == 1)).sum())
        fn = int(((t == 1) & (p == 0)).sum())
        per_label.append((tp, fp, fn, n - tp - fp - fn))
    hits = int((truth == pred).all(axis=1).sum())
    return FoldCounts(n_rows=n, exact_hits=hits, per_label=tuple(per_label),
                      seconds=seconds)


def count_multiclass(truth: np.ndarray, pred: np.ndarray, n_classes: int,
                     seconds: float = 0.0) -> FoldCounts:
    """Confusion for single-label class index vectors."""
    if truth.shape != pred.shape:
        raise ValueError("shape mismatch")
    n = len(truth)
    matrix = np.zeros((n_classes, n_classes), dtype=np.int64)
    for t, p in zip(truth, pred):
        matrix[int(t), int(p)] += 1
    per_label = []
    for c in range(n_classes):
        tp = int(matrix[c, c])
        fp = int(matrix[:, c].sum()) - tp
        fn = int(matrix[c, :].sum()) - tp
        per_label.append((tp, fp, fn, n - tp - fp - fn))
    hits = int(np.trace(matrix))
    return FoldCounts(n_rows=n, exact_hits=hits, per_label=tuple(per_label),
                      matrix=tuple(tuple(int(v) for v in row) for row in matrix),
                      seconds=seconds)


@dataclass(frozen=True)
class MetricsReport:
    """Mean metrics over folds plus the counts they derive from."""

    mode: str
    kind: str
    label_names: tuple
    folds: tuple
    precision: dict
    recall: dict
    f1: dict
    exact_match: float
    per_label_mean: float
    oov_rate: float = 0.0

    @property
    def fold_seconds(self) -> tuple:
        return tuple(f.seconds for f in self.folds)


def build_report(mode: str, kind: str, label_names, folds, oov_rate: float = 0.0) -> MetricsReport:
    if kind not in ("multilabel", "multiclass"):
        raise ValueError(f"unknown report kind {kind!r}")
    folds = tuple(folds)
    if not folds:
        raise ValueError("no folds")
    names = tuple(label_names)
    precision, recall, f1 = {}, {}, {}
    for j, name in enumerate(names):
        scores = [compute_f1(*f.per_label[j][:3]) for f in folds]
        precision[name] = sum(s[0] for s in scores) / len(folds)
        recall[name] = sum(s[1] for s in scores) / len(folds)
        f1[name] = sum(s[2] for s in scores) / len(folds)
    exact = sum(f.exact_match() for f in folds) / len(folds)
    mean = sum(f.per_label_mean() for f in folds) / len(folds)
    return MetricsReport(mode=mode, kind=kind, label_names=names, folds=folds,
                         precision=precision, recall=recall, f1=f1,
                         exact_match=exact, per_label_mean=mean, oov_rate=oov_rate)


def verify_report(report: MetricsReport, tol: float = 1e-12) -> None:
    """Recompute every mean from the stored counts; exact to tol."""
    rebuilt = build_report(report.mode, report.kind, report.label_names,
                           report.folds, report.oov_rate)
    pairs = [(report.exact_match, rebuilt.exact_match),
             (report.per_label_mean, rebuilt.per_label_mean)]
    for name in report.label_names:
        pairs.append((report.precision[name], rebuilt.precision[name]))
        pairs.append((report.recall[name], rebuilt.recall[name]))
        pairs.append((report.f1[name], rebuilt.f1[name]))
    for got, want in pairs:
        if not (abs(got - want) <= tol):
            raise AssertionError(f"stored metric {got!r} != recomputed {want!r}")
        if not (0.0 <= got <= 1.0):
            raise AssertionError(f"metric out of range: {got!r}")
    if report.kind == "multilabel" and report.exact_match > report.per_label_mean + tol:
        raise AssertionError("exact-match accuracy above per-label mean")
