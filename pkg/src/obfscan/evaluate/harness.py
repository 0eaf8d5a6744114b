"""Cross-validation driver and the stock study definitions.

A study is a named bundle of (model spec, fold regime) runs over a
prepared dataset: S1 compares a single random forest against the
two-forest voting ensemble on single-label stacks, S2 does the same
for direct multi-output forests, S3 for classifier chains, S4 scores
construction multi-class models, the E_* studies evaluate the chain
ensemble per corpus profile, and E_crossobf trains on one profile and
tests on another with no folding at all.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

from ..learn.base import Dataset, class_vector, derive_seed, label_matrix
from ..learn.forest import ExtraTrees, RandomForest, VotingEnsemble
from ..learn.multilabel import (BinaryRelevance, ClassifierChain,
                                MultiOutputForest, MultiOutputVoting)
from .folds import FOLD_MODES, FoldPlan, assert_no_group_leakage, make_folds
from .metrics import (MetricsReport, build_report, count_multiclass,
                      count_multilabel)

MODEL_KINDS = ("random_forest", "extra_trees", "voting_ensemble",
               "classifier_chain", "binary_relevance",
               "multi_output_forest", "multi_output_voting")
MULTILABEL_KINDS = ("classifier_chain", "binary_relevance",
                    "multi_output_forest", "multi_output_voting")
STUDIES = ("S1", "S2", "S3", "S4", "E_ollvm", "E_tigress", "E_mixed",
           "E_crossobf")
MODE_SHORT = {"standard_stratified": "std", "functionality_grouped": "func"}


@dataclass(frozen=True)
class ModelSpec:
    """A buildable model description: kind plus constructor params."""

    kind: str
    params: tuple = ()

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}")
        items = self.params.items() if isinstance(self.params, dict) else self.params
        object.__setattr__(self, "params",
                           tuple((str(k), v) for k, v in items))

    @property
    def multilabel(self) -> bool:
        return self.kind in MULTILABEL_KINDS

    def seed(self) -> int:
        return dict(self.params).get("seed", 0)

    def build(self, label_names, seed=None):
        params = dict(self.params)
        if seed is not None:
            params["seed"] = seed
        if self.kind == "random_forest":
            return RandomForest(**params)
        if self.kind == "extra_trees":
            return ExtraTrees(**params)
        if self.kind == "voting_ensemble":
            return VotingEnsemble(**params)
        if self.kind == "classifier_chain":
            return ClassifierChain(tuple(label_names), **params)
        if self.kind == "binary_relevance":
            return BinaryRelevance(tuple(label_names), **params)
        if self.kind == "multi_output_forest":
            return MultiOutputForest(tuple(label_names), **params)
        return MultiOutputVoting(tuple(label_names), **params)


def is_multilabel_dataset(dataset: Dataset) -> bool:
    return bool(dataset.labelsets) and isinstance(dataset.labelsets[0], frozenset)


def _check_compatible(dataset: Dataset, spec: ModelSpec) -> None:
    if is_multilabel_dataset(dataset) != spec.multilabel:
        raise ValueError(
            f"{spec.kind} expects a "
            f"{'multi-label' if spec.multilabel else 'single-label'} dataset")
    if not spec.multilabel:
        present = set(dataset.labelsets)
        if len(present) < 2:
            raise ValueError("need at least 2 distinct classes")


def _fit_and_count(spec, label_names, X_train, target_train, X_test,
                   target_test, seed, fold_name):
    started = time.perf_counter()
    try:
        model = spec.build(label_names, seed=seed)
        if spec.multilabel:
            model.fit(X_train, target_train)
        else:
            model.fit(X_train, target_train, n_classes=len(label_names))
    except Exception as exc:
        raise RuntimeError(f"training failed in {fold_name}: {exc}") from exc
    pred = model.predict(X_test)
    seconds = time.perf_counter() - started
    if spec.multilabel:
        counts = count_multilabel(target_test, pred, seconds=seconds)
    else:
        counts = count_multiclass(target_test, pred, len(label_names),
                                  seconds=seconds)
    return model, counts


def cross_validate(dataset: Dataset, spec: ModelSpec, plan: FoldPlan,
                   oov_rate: float = 0.0) -> MetricsReport:
    """Train on k-1 folds, test the held-out one, average the metrics."""
    _check_compatible(dataset, spec)
    if len(plan.assignment) != dataset.n_rows:
        raise ValueError("fold plan does not cover the dataset")
    if plan.mode == "functionality_grouped":
        assert_no_group_leakage(plan, dataset)
    multilabel = spec.multilabel
    target = label_matrix(dataset) if multilabel else class_vector(dataset)
    X = dataset.features
    folds = []
    for fold in range(plan.k):
        tr = plan.train_rows(fold)
        te = plan.test_rows(fold)
        _, counts = _fit_and_count(
            spec, dataset.label_names, X[tr], target[tr], X[te], target[te],
            seed=derive_seed(spec.seed(), "fold", fold), fold_name=f"fold {fold}")
        folds.append(counts)
    return build_report(plan.mode, "multilabel" if multilabel else "multiclass",
                        dataset.label_names, folds, oov_rate=oov_rate)


def fit_full(dataset: Dataset, spec: ModelSpec):
    """Train one model on the entire dataset."""
    _check_compatible(dataset, spec)
    target = label_matrix(dataset) if spec.multilabel else class_vector(dataset)
    model, _ = _fit_and_count(spec, dataset.label_names, dataset.features,
                              target, dataset.features[:1], target[:1],
                              seed=spec.seed(), fold_name="full fit")
    return model


def evaluate_transfer(train: Dataset, test: Dataset, spec: ModelSpec,
                      oov_rate: float = 0.0) -> MetricsReport:
    """Train on one corpus, test on another; a single unfolded pass."""
    if train.label_names != test.label_names:
        raise ValueError("train and test label sets disagree")
    if train.features.shape[1] != test.features.shape[1]:
        raise ValueError("train and test feature widths disagree")
    _check_compatible(train, spec)
    multilabel = spec.multilabel
    target_train = label_matrix(train) if multilabel else class_vector(train)
    target_test = label_matrix(test) if multilabel else class_vector(test)
    _, counts = _fit_and_count(
        spec, train.label_names, train.features, target_train,
        test.features, target_test, seed=spec.seed(), fold_name="transfer")
    return build_report("cross_profile",
                        "multilabel" if multilabel else "multiclass",
                        train.label_names, [counts], oov_rate=oov_rate)


@dataclass(frozen=True)
class StudyConfig:
    k: int = 10
    seed: int = 0
    modes: tuple = FOLD_MODES
    model_params: tuple = ()

    def params_with(self, extra: dict) -> tuple:
        merged = dict(self.model_params)
        merged.update(extra)
        return tuple(merged.items())


def _study_specs(study_id: str, config: StudyConfig) -> dict:
    base = dict(config.model_params)
    if study_id == "S1":
        return {"mono": ModelSpec("random_forest", base),
                "ensemble": ModelSpec("voting_ensemble", base)}
    if study_id == "S2":
        return {"mono": ModelSpec("multi_output_forest", base),
                "ensemble": ModelSpec("multi_output_voting", base)}
    if study_id == "S3":
        return {"mono": ModelSpec("classifier_chain",
                                  config.params_with({"link_kind": "random_forest"})),
                "ensemble": ModelSpec("classifier_chain", base)}
    if study_id == "S4":
        return {"model": ModelSpec("voting_ensemble", base)}
    return {"model": ModelSpec("classifier_chain", base)}


def run_study(study_id: str, data, config: StudyConfig = StudyConfig(),
              oov_rate: float = 0.0) -> dict:
    """Run one study and return {"name:regime": MetricsReport}."""
    if study_id not in STUDIES:
        raise ValueError(f"unknown study {study_id!r}")
    if isinstance(data, Dataset):
        data = {"main": data}
    specs = _study_specs(study_id, config)
    results = {}
    if study_id == "E_crossobf":
        if "train" not in data or "test" not in data:
            raise ValueError("E_crossobf needs 'train' and 'test' datasets")
        for name, spec in specs.items():
            seeded = ModelSpec(spec.kind, dict(
                dict(spec.params), seed=derive_seed(config.seed, study_id, name)))
            results[f"{name}:cross"] = evaluate_transfer(
                data["train"], data["test"], seeded, oov_rate=oov_rate)
        return results
    dataset = data["main"]
    for name, spec in specs.items():
        expects_multi = spec.multilabel
        if is_multilabel_dataset(dataset) != expects_multi:
            raise ValueError(f"study {study_id} needs a "
                             f"{'multi' if expects_multi else 'single'}-label corpus")
    for mode in config.modes:
        plan = make_folds(dataset, mode, config.k,
                          seed=derive_seed(config.seed, study_id, mode))
        for name, spec in specs.items():
            seeded = ModelSpec(spec.kind, dict(
                dict(spec.params), seed=derive_seed(config.seed, study_id, name)))
            results[f"{name}:{MODE_SHORT[mode]}"] = cross_validate(
                dataset, seeded, plan, oov_rate=oov_rate)
    return results
