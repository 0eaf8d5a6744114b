"""End-to-end orchestration: corpus, raw data, models, study reports.

Stages run in order (gen, rawdata, train, predict, evaluate) against a
workspace directory.  One config file drives every stage, every piece
of randomness is derived by name from its master seed, and a run
manifest records what each stage wrote with content digests, so a
rerun under the same seed reproduces every artifact byte for byte
(wall-clock sidecars aside).
"""
from __future__ import annotations

import hashlib
import json
import os
import time
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from . import __version__
from .corpus import (CorpusConfig, PROFILES, RecipeStep, StackRecipe,
                     generate_corpus, read_corpus, stock_recipes,
                     write_corpus)
from .corpus import MANIFEST_NAME as CORPUS_MANIFEST
from .evaluate import (FOLD_MODES, MULTILABEL_KINDS, MODEL_KINDS, STUDIES,
                       ModelSpec, StudyConfig, render_study,
                       report_from_record, run_study, verify_report,
                       write_study)
from .families import FAMILY_NAMES
from .features import (TermFrequencyVectorizer, load_vocabulary,
                       save_vocabulary, transform)
from .learn import (Dataset, class_vector, derive_seed, label_matrix,
                    load_model, save_model)
from .mir import MalformedIR, MirError, parse_function
from .normalize import MANIFEST_NAME as RAWDATA_MANIFEST
from .normalize import (RawDocument, corpus_to_rawdata, normalize,
                        read_rawdata, renumber_scope_check, write_rawdata)
from .symexec import exec_function
from .transforms.labels import CLEAN, CONSTRUCTIONS, LABELS

WORKSPACE_ENV = "OBFSCAN_WORKSPACE"
CONFIG_NAME = "config.json"
RUN_MANIFEST_NAME = "run_manifest.json"
RAWDATA_HEADER = "file\tlabels\tconstructions\ttag\tseed"

TRANSFORM_LABELS = tuple(sorted(LABELS))
SINGLE_CLASSES = tuple(sorted(LABELS + (CLEAN,)))

# profile-specific studies only make sense on a matching corpus
_PROFILE_STUDIES = {"E_ollvm": "ollvm_like", "E_tigress": "tigress_like",
                    "E_mixed": "mixed"}
_FOCUS_LABELS = tuple(lb for lb in LABELS if len(CONSTRUCTIONS[lb]) >= 2)


class UsageError(ValueError):
    """Bad command arguments or config values."""


class DataError(ValueError):
    """Missing or unusable stage inputs."""


def _as_pairs(value) -> tuple:
    items = value.items() if isinstance(value, dict) else value
    return tuple((str(k), v) for k, v in items)


@dataclass(frozen=True)
class PipelineConfig:
    """Everything the stages need, in one validated record.

    Directories are relative to the workspace root so a workspace can
    be moved or archived whole.
    """

    profile: str = "mixed"
    corpus_shape: str = "stock"
    per_cell: int = 30
    include_clean: bool = True
    families: tuple = FAMILY_NAMES
    master_seed: int = 0
    folds: int = 10
    fold_modes: tuple = FOLD_MODES
    studies: tuple = ("S1", "S3")
    model_kind: str = "classifier_chain"
    model_params: tuple = ()
    corpus_dir: str = "corpus"
    rawdata_dir: str = "rawdata"
    models_dir: str = "models"
    reports_dir: str = "reports"

    def __post_init__(self):
        object.__setattr__(self, "families", tuple(self.families))
        object.__setattr__(self, "fold_modes", tuple(self.fold_modes))
        object.__setattr__(self, "studies", tuple(self.studies))
        object.__setattr__(self, "model_params", _as_pairs(self.model_params))
        if self.profile not in PROFILES:
            raise UsageError(f"unknown obfuscator profile {self.profile!r}")
        shapes = ("stock", "single_layer")
        if self.corpus_shape not in shapes:
            base, _, focus = self.corpus_shape.partition(":")
            if base != "construction" or focus not in _FOCUS_LABELS:
                raise UsageError(
                    f"corpus shape must be one of {shapes}, or "
                    f"construction:<label> with label in {_FOCUS_LABELS}")
        if self.per_cell < 1:
            raise UsageError("per_cell must be at least 1")
        if len(self.families) < 2:
            raise UsageError("need at least 2 functionality families")
        if self.folds < 2:
            raise UsageError("folds must be at least 2")
        if not self.fold_modes or len(set(self.fold_modes)) != len(self.fold_modes):
            raise UsageError("fold_modes must be a non-empty set of modes")
        for mode in self.fold_modes:
            if mode not in FOLD_MODES:
                raise UsageError(f"unknown fold mode {mode!r}")
        for token in self.studies:
            parse_study_token(token)
        if self.model_kind not in MODEL_KINDS:
            raise UsageError(f"unknown model kind {self.model_kind!r}")
        for name in ("corpus_dir", "rawdata_dir", "models_dir", "reports_dir"):
            value = getattr(self, name)
            if not value or os.path.isabs(value):
                raise UsageError(f"{name} must be a workspace-relative path")


def parse_study_token(token: str) -> tuple:
    """Split a study token into (study_id, focus or None).

    Only S4 takes a focus label (the transform whose constructions are
    classified); a bare "S4" means "S4:Virt".
    """
    base, _, focus = str(token).partition(":")
    if base not in STUDIES:
        raise UsageError(f"unknown study {token!r}")
    if base == "S4":
        focus = focus or "Virt"
        if focus not in _FOCUS_LABELS:
            raise UsageError(
                f"study S4 focus must be one of {_FOCUS_LABELS}, not {focus!r}")
        return base, focus
    if focus:
        raise UsageError(f"study {base} takes no focus suffix")
    return base, None


def config_to_record(config: PipelineConfig) -> dict:
    record = {}
    for f in fields(config):
        value = getattr(config, f.name)
        if f.name == "model_params":
            value = [[k, v] for k, v in value]
        elif isinstance(value, tuple):
            value = list(value)
        record[f.name] = value
    return record


def config_from_record(record: dict) -> PipelineConfig:
    known = {f.name for f in fields(PipelineConfig)}
    unknown = sorted(set(record) - known)
    if unknown:
        raise UsageError(f"unknown config fields: {unknown}")
    kwargs = dict(record)
    for name in ("families", "fold_modes", "studies"):
        if name in kwargs:
            kwargs[name] = tuple(kwargs[name])
    if "model_params" in kwargs:
        kwargs["model_params"] = _as_pairs(kwargs["model_params"])
    return PipelineConfig(**kwargs)


def save_config(config: PipelineConfig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps(config_to_record(config), indent=1, sort_keys=True)
    path.write_text(text + "\n")
    return path


def load_config(path) -> PipelineConfig:
    path = Path(path)
    if not path.exists():
        raise DataError(f"no config file at {path}")
    try:
        record = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"unreadable config {path}: {exc}") from exc
    return config_from_record(record)


def config_digest(config: PipelineConfig) -> str:
    text = json.dumps(config_to_record(config), sort_keys=True)
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def resolve_workspace(override=None) -> Path:
    return Path(override or os.environ.get(WORKSPACE_ENV) or ".")


def load_workspace_config(workspace: Path, config_path=None) -> PipelineConfig:
    if config_path is not None:
        return load_config(config_path)
    default = workspace / CONFIG_NAME
    if default.exists():
        return load_config(default)
    return PipelineConfig()


def file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _tree_outputs(workspace: Path, outdir: Path) -> dict:
    """{workspace-relative path: digest} for every file under outdir."""
    outputs = {}
    for p in sorted(outdir.rglob("*")):
        if p.is_file():
            outputs[p.relative_to(workspace).as_posix()] = file_digest(p)
    return outputs


@dataclass
class RunManifest:
    """What each stage wrote, keyed by stage name.

    A file may be claimed by at most one stage; rerunning a stage
    replaces its own entry.
    """

    config_digest: str
    tool_version: str = __version__
    stages: dict = field(default_factory=dict)

    def record_stage(self, name: str, seconds: float, outputs: dict,
                     inputs: dict = None) -> None:
        owners = {path: stage for stage, rec in self.stages.items()
                  if stage != name for path in rec["outputs"]}
        clashes = sorted(p for p in outputs if p in owners)
        if clashes:
            raise AssertionError(
                f"stage {name!r} rewrote files owned by "
                f"{owners[clashes[0]]!r}: {clashes[:3]}")
        self.stages[name] = {
            "inputs": dict(inputs or {}),
            "outputs": dict(outputs),
            "seconds": round(seconds, 3),
        }

    def save(self, path) -> None:
        record = {
            "config_digest": self.config_digest,
            "tool_version": self.tool_version,
            "stages": self.stages,
        }
        Path(path).write_text(json.dumps(record, indent=1, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path, config_digest: str) -> "RunManifest":
        path = Path(path)
        if not path.exists():
            return cls(config_digest)
        record = json.loads(path.read_text())
        if record.get("config_digest") != config_digest:
            return cls(config_digest)
        return cls(config_digest, record.get("tool_version", __version__),
                   dict(record.get("stages", {})))


def _record_stage(workspace: Path, config: PipelineConfig, name: str,
                  started: float, outputs: dict, inputs: dict = None) -> None:
    digest = config_digest(config)
    manifest = RunManifest.load(workspace / RUN_MANIFEST_NAME, digest)
    manifest.record_stage(name, time.perf_counter() - started, outputs, inputs)
    manifest.save(workspace / RUN_MANIFEST_NAME)


def _clear_files(outdir: Path, patterns) -> None:
    if not outdir.exists():
        return
    for pattern in patterns:
        for p in outdir.glob(pattern):
            p.unlink()


def corpus_recipes(config: PipelineConfig) -> tuple:
    """The recipe cells the corpus stage will generate."""
    if config.corpus_shape == "stock":
        recipes = list(stock_recipes(config.profile))
    elif config.corpus_shape == "single_layer":
        recipes = [StackRecipe((RecipeStep(lb),), config.profile)
                   for lb in LABELS]
    else:
        focus = config.corpus_shape.partition(":")[2]
        return (StackRecipe((RecipeStep(focus),), config.profile),)
    if config.include_clean:
        recipes.append(StackRecipe((), config.profile))
    return tuple(recipes)


def plan_cells(config: PipelineConfig) -> list:
    return [(recipe.describe(), config.per_cell)
            for recipe in corpus_recipes(config)]


def stage_gen(config: PipelineConfig, workspace: Path) -> tuple:
    """Generate the corpus; returns (corpus dir, sample count)."""
    started = time.perf_counter()
    corpus_config = CorpusConfig(
        corpus_recipes(config), config.per_cell,
        derive_seed(config.master_seed, "corpus"), config.families)
    samples = generate_corpus(corpus_config)
    outdir = workspace / config.corpus_dir
    _clear_files(outdir, ("sample_*.mir", CORPUS_MANIFEST))
    write_corpus(samples, outdir)
    _record_stage(workspace, config, "gen", started,
                  _tree_outputs(workspace, outdir))
    return outdir, len(samples)


def stage_rawdata(config: PipelineConfig, workspace: Path) -> tuple:
    """Symbolize and normalize the corpus; returns (dir, doc count)."""
    started = time.perf_counter()
    corpus_dir = workspace / config.corpus_dir
    corpus_manifest = corpus_dir / CORPUS_MANIFEST
    if not corpus_manifest.exists():
        raise DataError(f"no corpus manifest under {corpus_dir}; run gen first")
    samples = read_corpus(corpus_dir)
    docs = []
    for i, sample in enumerate(samples):
        try:
            doc = normalize(exec_function(sample.function))
        except MirError as exc:
            raise MalformedIR(f"sample_{i:05d}.mir: {exc}") from exc
        docs.append(replace(
            doc, labels=frozenset(sample.labels),
            construction_labels=dict(sample.construction_labels),
            seed=sample.seed, source_sample=sample))
    violations = [f"doc_{i:05d}: {v}"
                  for i, doc in enumerate(docs)
                  for v in renumber_scope_check(doc)]
    if violations:
        raise AssertionError(
            "normalization leaked concrete names: " + "; ".join(violations[:5]))
    outdir = workspace / config.rawdata_dir
    _clear_files(outdir, ("doc_*.txt", RAWDATA_MANIFEST))
    write_rawdata(docs, outdir)
    _record_stage(workspace, config, "rawdata", started,
                  _tree_outputs(workspace, outdir),
                  inputs={"corpus": file_digest(corpus_manifest)})
    return outdir, len(docs)


def load_rawdata_checked(rawdata_dir: Path) -> list:
    manifest = rawdata_dir / RAWDATA_MANIFEST
    if not manifest.exists():
        raise DataError(f"no raw data under {rawdata_dir}; run rawdata first")
    header = manifest.read_text().splitlines()[0] if manifest.stat().st_size else ""
    if header != RAWDATA_HEADER:
        raise DataError(
            f"raw-data manifest header {header!r} is missing columns "
            f"(expected {RAWDATA_HEADER!r})")
    docs = read_rawdata(rawdata_dir)
    if not docs:
        raise DataError(f"raw-data manifest under {rawdata_dir} has no rows")
    return docs


def docs_features(docs) -> tuple:
    """Fit a vocabulary over the documents; returns (matrix, vocabulary)."""
    vectorizer = TermFrequencyVectorizer()
    X = vectorizer.fit_transform(docs)
    return X, vectorizer.vocabulary_


def multilabel_dataset(docs, X) -> Dataset:
    labelsets = tuple(frozenset(d.labels - {CLEAN}) for d in docs)
    groups = tuple(d.functionality_tag for d in docs)
    return Dataset(X, labelsets, groups, TRANSFORM_LABELS)


def single_layer_dataset(docs, X) -> Dataset:
    """Rows with at most one transform, classed by it (or Clean)."""
    keep, classes = [], []
    for i, doc in enumerate(docs):
        labels = doc.labels - {CLEAN}
        if len(labels) > 1:
            continue
        keep.append(i)
        classes.append(next(iter(labels)) if labels else CLEAN)
    if not keep:
        raise DataError("corpus has no single-layer samples")
    groups = tuple(docs[i].functionality_tag for i in keep)
    return Dataset(X[keep], tuple(classes), groups, SINGLE_CLASSES)


def construction_dataset(docs, X, focus: str) -> Dataset:
    """Rows carrying the focus transform, classed by its construction."""
    if focus not in CONSTRUCTIONS:
        raise UsageError(f"unknown transform label {focus!r}")
    keep, classes = [], []
    for i, doc in enumerate(docs):
        construction = doc.construction_labels.get(focus)
        if construction is None:
            continue
        keep.append(i)
        classes.append(construction)
    if not keep:
        raise DataError(f"corpus has no {focus} samples")
    if len(set(classes)) < 2:
        raise DataError(
            f"{focus} corpus shows a single construction; "
            "construction detection needs at least 2")
    groups = tuple(docs[i].functionality_tag for i in keep)
    return Dataset(X[keep], tuple(classes), groups, CONSTRUCTIONS[focus])


def _vocab_path(model_path: Path) -> Path:
    return model_path.parent / (model_path.stem + ".vocab.txt")


def stage_train(config: PipelineConfig, workspace: Path, kind: str = None,
                params=(), construction: str = None,
                out_name: str = None) -> Path:
    """Fit one model over the raw data and serialize it.

    Default target is the multi-label transform detector; passing a
    construction label trains the per-transform construction
    classifier on the rows carrying that transform instead.
    """
    started = time.perf_counter()
    docs = load_rawdata_checked(workspace / config.rawdata_dir)
    X, vocab = docs_features(docs)
    if kind is None:
        kind = config.model_kind if construction is None else "voting_ensemble"
    merged = dict(config.model_params)
    merged.update(dict(_as_pairs(params)))
    spec = ModelSpec(kind, merged)
    if construction is None:
        if not spec.multilabel:
            raise UsageError(
                f"{kind} is single-label; transform detection needs one of "
                f"{MULTILABEL_KINDS}")
        dataset = multilabel_dataset(docs, X)
        target_name = "transforms"
    else:
        if construction not in _FOCUS_LABELS:
            raise UsageError(
                f"construction target must be one of {_FOCUS_LABELS}")
        if spec.multilabel:
            raise UsageError(
                f"{kind} is multi-label; construction detection needs a "
                "single-label model")
        dataset = construction_dataset(docs, X, construction)
        target_name = f"construction_{construction}"
    seed = merged.get("seed")
    if seed is None:
        seed = derive_seed(config.master_seed, "train", target_name, kind)
    try:
        model = spec.build(dataset.label_names, seed=seed)
    except TypeError as exc:
        raise UsageError(f"bad parameters for {kind}: {exc}") from exc
    if spec.multilabel:
        model.fit(dataset.features, label_matrix(dataset))
    else:
        model.fit(dataset.features, class_vector(dataset),
                  n_classes=len(dataset.label_names))

    models_dir = workspace / config.models_dir
    models_dir.mkdir(parents=True, exist_ok=True)
    model_path = models_dir / (out_name or f"{target_name}.json")
    save_model(model, model_path, vocabulary=vocab)
    save_vocabulary(vocab, _vocab_path(model_path))
    meta = {
        "config_digest": config_digest(config),
        "kind": kind,
        "target": target_name,
        "seed": seed,
        "rows": dataset.n_rows,
        "labels": list(dataset.label_names),
    }
    meta_path = models_dir / (model_path.stem + ".meta.json")
    meta_path.write_text(json.dumps(meta, indent=1, sort_keys=True) + "\n")
    outputs = {p.relative_to(workspace).as_posix(): file_digest(p)
               for p in (model_path, _vocab_path(model_path), meta_path)}
    rawdata_manifest = workspace / config.rawdata_dir / RAWDATA_MANIFEST
    _record_stage(workspace, config, f"train:{target_name}", started, outputs,
                  inputs={"rawdata": file_digest(rawdata_manifest)})
    return model_path


def document_from_mir(path) -> RawDocument:
    path = Path(path)
    if not path.exists():
        raise DataError(f"no input file at {path}")
    try:
        fn = parse_function(path.read_text())
        return normalize(exec_function(fn))
    except MirError as exc:
        raise MalformedIR(f"{path.name}: {exc}") from exc


def document_from_rawdata(path) -> RawDocument:
    path = Path(path)
    if not path.exists():
        raise DataError(f"no input file at {path}")
    return RawDocument(path.read_text())


def load_prediction_bundle(model_path, vocab_path=None) -> tuple:
    """Load a model and the vocabulary it was fitted against."""
    model_path = Path(model_path)
    if not model_path.exists():
        raise DataError(f"no model file at {model_path}")
    vocab_path = Path(vocab_path) if vocab_path else _vocab_path(model_path)
    if not vocab_path.exists():
        raise DataError(f"no vocabulary file at {vocab_path}")
    vocab = load_vocabulary(vocab_path)
    model = load_model(model_path, vocabulary=vocab)
    return model, vocab


def predict_document(model, vocab, doc: RawDocument):
    """Model output for one document: a label set or a class index."""
    X = transform(doc, vocab).weights.reshape(1, -1)
    if hasattr(model, "predict_labels"):
        return model.predict_labels(X)[0]
    return int(model.predict(X)[0])


def run_prediction(doc: RawDocument, model_path, vocab_path=None,
                   construction_models=()) -> list:
    """Predict transforms (and constructions) for one document.

    construction_models is a sequence of (label, model path) pairs;
    a construction line is printed only for detected labels.  Returns
    the output lines.
    """
    model, vocab = load_prediction_bundle(model_path, vocab_path)
    predicted = predict_document(model, vocab, doc)
    if not isinstance(predicted, frozenset):
        raise UsageError("prediction needs a multi-label transform model")
    lines = [f"labels: {' '.join(sorted(predicted))}"]
    for label, path in construction_models:
        if label not in _FOCUS_LABELS:
            raise UsageError(
                f"construction model label must be one of {_FOCUS_LABELS}")
        if label not in predicted:
            continue
        cmodel, cvocab = load_prediction_bundle(path)
        index = predict_document(cmodel, cvocab, doc)
        lines.append(f"{label} construction: {CONSTRUCTIONS[label][index]}")
    return lines


@dataclass(frozen=True)
class StudyRun:
    file_id: str
    results: dict
    txt_path: str
    json_path: str
    timings_path: str


def dataset_for_study(study: str, focus, docs, X) -> Dataset:
    if study == "S1":
        return single_layer_dataset(docs, X)
    if study == "S4":
        return construction_dataset(docs, X, focus)
    return multilabel_dataset(docs, X)


def crossobf_datasets(config: PipelineConfig) -> tuple:
    """In-memory train/test corpora for the cross-obfuscator study.

    Train: the ollvm_like stock stacks plus clean cells.  Test:
    single-layer Flat in the tigress flavor (both constructions).
    Returns (train dataset, test dataset, mean test OOV rate).
    """
    train_recipes = list(stock_recipes("ollvm_like"))
    train_recipes.append(StackRecipe((), "ollvm_like"))
    test_recipes = (StackRecipe((RecipeStep("Flat"),), "tigress_like"),)
    train_samples = generate_corpus(CorpusConfig(
        tuple(train_recipes), config.per_cell,
        derive_seed(config.master_seed, "crossobf", "train"),
        config.families))
    test_samples = generate_corpus(CorpusConfig(
        test_recipes, config.per_cell,
        derive_seed(config.master_seed, "crossobf", "test"),
        config.families))
    train_docs = corpus_to_rawdata(train_samples)
    test_docs = corpus_to_rawdata(test_samples)
    vectorizer = TermFrequencyVectorizer()
    X_train = vectorizer.fit_transform(train_docs)
    X_test = vectorizer.transform(test_docs)
    oov_rate = float(vectorizer.oov_rates_.mean())
    return (multilabel_dataset(train_docs, X_train),
            multilabel_dataset(test_docs, X_test), oov_rate)


def stage_evaluate(config: PipelineConfig, workspace: Path,
                   tokens=None) -> list:
    """Run studies and write their reports; returns StudyRun records."""
    started = time.perf_counter()
    tokens = tuple(tokens) if tokens else config.studies
    parsed = [parse_study_token(t) for t in tokens]
    for study, _ in parsed:
        want = _PROFILE_STUDIES.get(study)
        if want and config.profile != want:
            raise UsageError(
                f"study {study} expects profile {want!r}; workspace corpus "
                f"profile is {config.profile!r}")
    docs = X = None
    if any(study != "E_crossobf" for study, _ in parsed):
        docs = load_rawdata_checked(workspace / config.rawdata_dir)
        X, _ = docs_features(docs)
    study_seed = derive_seed(config.master_seed, "evaluate")
    study_config = StudyConfig(k=config.folds, seed=study_seed,
                               modes=config.fold_modes,
                               model_params=config.model_params)
    digest = config_digest(config)
    reports_dir = workspace / config.reports_dir
    runs = []
    for study, focus in parsed:
        if study == "E_crossobf":
            train, test, oov_rate = crossobf_datasets(config)
            results = run_study(study, {"train": train, "test": test},
                                study_config, oov_rate=oov_rate)
        else:
            dataset = dataset_for_study(study, focus, docs, X)
            results = run_study(study, dataset, study_config)
        for report in results.values():
            verify_report(report)
        file_id = study if focus is None else f"{study}_{focus}"
        provenance = {
            "config_digest": digest,
            "master_seed": config.master_seed,
            "study_seed": study_seed,
            "study": study,
            "focus": focus,
            "k": config.folds,
            "modes": list(config.fold_modes),
        }
        txt_path, json_path, timings_path = write_study(
            str(reports_dir), file_id, results, provenance)
        run = StudyRun(file_id, results, txt_path, json_path, timings_path)
        outputs = {Path(p).relative_to(workspace).as_posix(): file_digest(p)
                   for p in (txt_path, json_path, timings_path)}
        inputs = {}
        rawdata_manifest = workspace / config.rawdata_dir / RAWDATA_MANIFEST
        if study != "E_crossobf" and rawdata_manifest.exists():
            inputs["rawdata"] = file_digest(rawdata_manifest)
        _record_stage(workspace, config, f"evaluate:{file_id}", started,
                      outputs, inputs)
        started = time.perf_counter()
        runs.append(run)
    return runs


def stage_report(config: PipelineConfig, workspace: Path,
                 file_id: str) -> str:
    """Re-render a stored study report after checking its integrity."""
    json_path = workspace / config.reports_dir / f"{file_id}.json"
    if not json_path.exists():
        raise DataError(f"no stored report at {json_path}")
    record = json.loads(json_path.read_text())
    rebuilt = {key: report_from_record(rec)
               for key, rec in record["results"].items()}
    for report in rebuilt.values():
        verify_report(report)
    table = render_study(record["study"], rebuilt, timings=False)
    prov = record.get("provenance", {})
    keys = ("config_digest", "master_seed", "study_seed")
    line = " ".join(f"{k}={prov[k]}" for k in keys if k in prov)
    return table + (f"provenance: {line}\n" if line else "")
