"""Study results as a human table and a machine-readable record.

The table shows each metric under one column per fold regime ("std"
and "func"; transfer studies get a single "cross" column).  The JSON
record keeps the raw per-fold confusion counts so every number in the
table can be recomputed exactly, plus whatever provenance the caller
supplies (config digest, seeds).  Wall-clock timings go to a separate
sidecar file so the canonical table and record are byte-stable under
rerun with the same seed.
"""

from __future__ import annotations

import json
import os

from .metrics import FoldCounts, MetricsReport, build_report


def _models_and_regimes(results: dict) -> tuple:
    models, regimes = [], []
    for key in results:
        name, regime = key.split(":", 1)
        if name not in models:
            models.append(name)
        if regime not in regimes:
            regimes.append(regime)
    return models, regimes


def _fmt(value: float) -> str:
    return f"{value:.4f}"


def render_study(study_id: str, results: dict, timings: bool = True) -> str:
    """Fixed-width table over all models and regimes of one study."""
    models, regimes = _models_and_regimes(results)
    lines = [f"study {study_id}", ""]
    for model in models:
        picked = {r: results[f"{model}:{r}"] for r in regimes
                  if f"{model}:{r}" in results}
        if not picked:
            continue
        any_report = next(iter(picked.values()))
        lines.append(f"[{model}]")
        header = f"  {'label':<14}" + "".join(
            f"{'F1(' + r + ')':>12}" for r in picked)
        lines.append(header)
        for name in any_report.label_names:
            row = f"  {name:<14}" + "".join(
                f"{_fmt(rep.f1[name]):>12}" for rep in picked.values())
            lines.append(row)
        for metric, getter in (("exact-match", lambda r: r.exact_match),
                               ("label-mean", lambda r: r.per_label_mean),
                               ("oov-rate", lambda r: r.oov_rate)):
            lines.append(f"  {metric:<14}" + "".join(
                f"{_fmt(getter(rep)):>12}" for rep in picked.values()))
        if timings:
            lines.append(f"  {'fold-seconds':<14}" + "".join(
                f"{_fmt(sum(rep.fold_seconds)):>12}" for rep in picked.values()))
        lines.append("")
    return "\n".join(lines)


def _report_record(report: MetricsReport) -> dict:
    return {
        "mode": report.mode,
        "kind": report.kind,
        "labels": list(report.label_names),
        "precision": {k: report.precision[k] for k in report.label_names},
        "recall": {k: report.recall[k] for k in report.label_names},
        "f1": {k: report.f1[k] for k in report.label_names},
        "exact_match": report.exact_match,
        "per_label_mean": report.per_label_mean,
        "oov_rate": report.oov_rate,
        "folds": [{
            "n_rows": f.n_rows,
            "exact_hits": f.exact_hits,
            "per_label": [list(c) for c in f.per_label],
            "matrix": None if f.matrix is None else [list(r) for r in f.matrix],
        } for f in report.folds],
    }


def study_record(study_id: str, results: dict, provenance: dict = None) -> dict:
    return {
        "study": study_id,
        "provenance": dict(provenance or {}),
        "results": {key: _report_record(rep) for key, rep in sorted(results.items())},
    }


def study_timings(study_id: str, results: dict) -> dict:
    return {
        "study": study_id,
        "fold_seconds": {key: list(rep.fold_seconds)
                         for key, rep in sorted(results.items())},
    }


def report_from_record(record: dict) -> MetricsReport:
    """Rebuild one model:regime report from its stored record.

    The stored means must match a recomputation from the stored
    confusion counts; a disagreement means the file was edited.
    """
    folds = []
    for f in record["folds"]:
        per_label = tuple(tuple(int(v) for v in c) for c in f["per_label"])
        matrix = f.get("matrix")
        if matrix is not None:
            matrix = tuple(tuple(int(v) for v in row) for row in matrix)
        folds.append(FoldCounts(int(f["n_rows"]), int(f["exact_hits"]),
                                per_label, matrix=matrix))
    rebuilt = build_report(record["mode"], record["kind"],
                           tuple(record["labels"]), folds,
                           oov_rate=float(record["oov_rate"]))
    tol = 1e-12
    stale = abs(rebuilt.exact_match - record["exact_match"]) > tol
    stale = stale or abs(rebuilt.per_label_mean - record["per_label_mean"]) > tol
    for name in rebuilt.label_names:
        for field in ("precision", "recall", "f1"):
            stored = record[field][name]
            stale = stale or abs(getattr(rebuilt, field)[name] - stored) > tol
    if stale:
        raise AssertionError(
            "stored report disagrees with its own confusion counts")
    return rebuilt


def write_study(out_dir: str, study_id: str, results: dict,
                provenance: dict = None) -> tuple:
    """Write {study}.txt, {study}.json, and {study}.timings.json.

    The first two are byte-stable under seeded rerun; only the
    timings sidecar varies.  Returns all three paths.
    """
    os.makedirs(out_dir, exist_ok=True)
    txt_path = os.path.join(out_dir, f"{study_id}.txt")
    json_path = os.path.join(out_dir, f"{study_id}.json")
    timings_path = os.path.join(out_dir, f"{study_id}.timings.json")
    with open(txt_path, "w", encoding="utf-8") as fh:
        fh.write(render_study(study_id, results, timings=False))
    record = study_record(study_id, results, provenance)
    with open(json_path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(record, indent=1, sort_keys=True) + "\n")
    with open(timings_path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(study_timings(study_id, results),
                            indent=1, sort_keys=True) + "\n")
    return txt_path, json_path, timings_path
