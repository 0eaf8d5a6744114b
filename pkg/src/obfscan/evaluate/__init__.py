"""Evaluation: fold regimes, metrics, cross-validation, studies."""

from .folds import (FOLD_MODES, FoldPlan, TooFewGroups,
                    assert_no_group_leakage, make_folds)
from .harness import (MODE_SHORT, MODEL_KINDS, MULTILABEL_KINDS, STUDIES,
                      ModelSpec, StudyConfig, cross_validate,
                      evaluate_transfer, fit_full, is_multilabel_dataset,
                      run_study)
from .metrics import (FoldCounts, MetricsReport, build_report, compute_f1,
                      count_multiclass, count_multilabel, verify_report)
from .report import (render_study, report_from_record, study_record,
                     study_timings, write_study)

__all__ = [
    "FOLD_MODES",
    "FoldCounts",
    "FoldPlan",
    "MetricsReport",
    "MODEL_KINDS",
    "MODE_SHORT",
    "MULTILABEL_KINDS",
    "ModelSpec",
    "STUDIES",
    "StudyConfig",
    "TooFewGroups",
    "assert_no_group_leakage",
    "build_report",
    "compute_f1",
    "count_multiclass",
    "count_multilabel",
    "cross_validate",
    "evaluate_transfer",
    "fit_full",
    "is_multilabel_dataset",
    "make_folds",
    "render_study",
    "report_from_record",
    "run_study",
    "study_record",
    "study_timings",
    "verify_report",
    "write_study",
]
