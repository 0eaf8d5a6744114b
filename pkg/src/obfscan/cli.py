"""Command line front end.

Subcommands mirror the pipeline stages: gen, rawdata, train, predict,
evaluate, report.  Exit codes: 0 success, 1 usage problem, 2 missing
or unusable data, 3 violated internal invariant.
"""
from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

from . import pipeline
from .corpus import RecipeFailure
from .evaluate import TooFewGroups, render_study
from .features import EmptyCorpus
from .learn import DimensionMismatch, EmptyDataset, FingerprintMismatch
from .mir import MirError
from .pipeline import DataError, UsageError

_DATA_ERRORS = (DataError, MirError, RecipeFailure, EmptyCorpus,
                EmptyDataset, DimensionMismatch, FingerprintMismatch,
                TooFewGroups, OSError)


class _Parser(argparse.ArgumentParser):
    """Argparse that reports usage problems as exceptions."""

    def error(self, message):
        raise UsageError(message)


def _coerce(text: str):
    """CLI parameter values: int, float, bool, none, or plain string."""
    lowered = text.lower()
    if lowered in ("true", "false"):
        return lowered == "true"
    if lowered == "none":
        return None
    for kind in (int, float):
        try:
            return kind(text)
        except ValueError:
            continue
    return text


def _parse_params(entries) -> tuple:
    pairs = []
    for entry in entries or ():
        name, sep, value = entry.partition("=")
        if not sep or not name:
            raise UsageError(f"expected name=value, got {entry!r}")
        pairs.append((name, _coerce(value)))
    return tuple(pairs)


def _parse_construction_models(entries) -> tuple:
    pairs = []
    for entry in entries or ():
        label, sep, path = entry.partition("=")
        if not sep or not label or not path:
            raise UsageError(f"expected LABEL=path, got {entry!r}")
        pairs.append((label, path))
    return tuple(pairs)


def build_parser() -> argparse.ArgumentParser:
    root = _Parser(prog="obfscan",
                   description="detect obfuscation transformations in "
                               "normalized machine code")
    root.add_argument("--workspace",
                      help="workspace root (default $OBFSCAN_WORKSPACE or .)")
    root.add_argument("--config",
                      help="config file (default <workspace>/config.json)")
    sub = root.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate the labeled corpus")
    gen.add_argument("--dry-run", action="store_true",
                     help="print the planned cells and write nothing")
    gen.add_argument("--profile", help="obfuscator profile override")
    gen.add_argument("--shape", help="corpus shape override")
    gen.add_argument("--per-cell", type=int, help="samples per recipe cell")
    gen.add_argument("--seed", type=int, help="master seed override")

    sub.add_parser("rawdata",
                   help="symbolize and normalize the corpus into documents")

    train = sub.add_parser("train", help="fit and serialize one model")
    train.add_argument("--kind", help="model kind override")
    train.add_argument("--construction", metavar="LABEL",
                       help="train the construction classifier for LABEL "
                            "instead of the transform detector")
    train.add_argument("--param", action="append", metavar="NAME=VALUE",
                       help="model parameter override (repeatable)")
    train.add_argument("--out", help="model file name")

    predict = sub.add_parser("predict",
                             help="predict labels for one function")
    predict.add_argument("input", help="MIR function file (or raw-data "
                                       "document with --rawdata)")
    predict.add_argument("--model", default=None,
                         help="transform model file (default "
                              "<workspace>/models/transforms.json)")
    predict.add_argument("--vocab", default=None,
                         help="vocabulary file (default <model>.vocab.txt)")
    predict.add_argument("--rawdata", action="store_true",
                         help="input is a pre-normalized document")
    predict.add_argument("--construction-model", action="append",
                         metavar="LABEL=PATH",
                         help="construction classifier for LABEL (repeatable)")

    evaluate = sub.add_parser("evaluate", help="run studies, write reports")
    evaluate.add_argument("studies", nargs="*",
                          help="study ids (default from config); S4 takes "
                               "an optional :LABEL focus, e.g. S4:Flat")

    report = sub.add_parser("report", help="re-render a stored report")
    report.add_argument("study", help="report id, e.g. S3 or S4_Virt")

    return root


def _resolve(path, workspace) -> Path:
    p = Path(path)
    return p if p.is_absolute() else workspace / p


def _cmd_gen(args, workspace, config) -> int:
    overrides = {}
    if args.profile is not None:
        overrides["profile"] = args.profile
    if args.shape is not None:
        overrides["corpus_shape"] = args.shape
    if args.per_cell is not None:
        overrides["per_cell"] = args.per_cell
    if args.seed is not None:
        overrides["master_seed"] = args.seed
    if overrides:
        config = dataclasses.replace(config, **overrides)
    if args.dry_run:
        cells = pipeline.plan_cells(config)
        for name, count in cells:
            print(f"{name}\t{count}")
        print(f"total\t{sum(n for _, n in cells)}")
        return 0
    workspace.mkdir(parents=True, exist_ok=True)
    pipeline.save_config(config, workspace / pipeline.CONFIG_NAME)
    outdir, count = pipeline.stage_gen(config, workspace)
    print(f"corpus: {count} samples -> {outdir}")
    return 0


def _cmd_rawdata(args, workspace, config) -> int:
    outdir, count = pipeline.stage_rawdata(config, workspace)
    print(f"raw data: {count} documents -> {outdir}")
    return 0


def _cmd_train(args, workspace, config) -> int:
    model_path = pipeline.stage_train(
        config, workspace, kind=args.kind,
        params=_parse_params(args.param),
        construction=args.construction, out_name=args.out)
    print(f"model -> {model_path}")
    return 0


def _cmd_predict(args, workspace, config) -> int:
    if args.rawdata:
        doc = pipeline.document_from_rawdata(_resolve(args.input, workspace))
    else:
        doc = pipeline.document_from_mir(_resolve(args.input, workspace))
    model_path = _resolve(args.model, workspace) if args.model else (
        workspace / config.models_dir / "transforms.json")
    vocab_path = _resolve(args.vocab, workspace) if args.vocab else None
    construction_models = tuple(
        (label, _resolve(path, workspace))
        for label, path in _parse_construction_models(args.construction_model))
    for line in pipeline.run_prediction(doc, model_path, vocab_path,
                                        construction_models):
        print(line)
    return 0


def _cmd_evaluate(args, workspace, config) -> int:
    runs = pipeline.stage_evaluate(config, workspace, args.studies or None)
    for run in runs:
        print(render_study(run.file_id, run.results))
        print(f"report -> {run.json_path}")
    return 0


def _cmd_report(args, workspace, config) -> int:
    print(pipeline.stage_report(config, workspace, args.study))
    return 0


_COMMANDS = {
    "gen": _cmd_gen,
    "rawdata": _cmd_rawdata,
    "train": _cmd_train,
    "predict": _cmd_predict,
    "evaluate": _cmd_evaluate,
    "report": _cmd_report,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        workspace = pipeline.resolve_workspace(args.workspace)
        config = pipeline.load_workspace_config(workspace, args.config)
        return _COMMANDS[args.command](args, workspace, config)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except _DATA_ERRORS as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except AssertionError as exc:
        print(f"invariant violated: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except RuntimeError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
