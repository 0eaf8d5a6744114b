"""Balanced, labeled corpora of obfuscated MIR functions.

A corpus cell is one recipe; each cell gets the same number of samples
and rotates through the functionality families so grouped folds never
starve. Every sample records which transformations actually changed the
code, the construction each used, and the seed that rebuilds it.
"""
from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass
from pathlib import Path

from .families import FAMILIES, FAMILY_NAMES, build_family
from .mir import (FunctionRunner, Function, MalformedIR, MirError,
                  parse_function, print_function, validate_function)
from .transforms import (CONSTRUCTIONS, PassContext, TransformError,
                         apply_pass)
from .transforms.labels import CLEAN, check_construction, check_label

PROFILES = ("tigress_like", "ollvm_like", "mixed")
OPAQUE_COUNTS = (4, 8, 12, 16)
PRESERVE_TUPLES = 32
MAX_ATTEMPTS = 8
MANIFEST_NAME = "manifest.json"


class RecipeFailure(Exception):
    """A cell could not produce an honestly labeled sample."""


@dataclass(frozen=True)
class RecipeStep:
    """One pass application: label, optional pinned construction, and
    keyword overrides for the pass (as a tuple of (name, value) pairs)."""
    label: str
    construction: str | None = None
    params: tuple = ()

    def __post_init__(self):
        check_label(self.label)
        if self.construction is not None:
            check_construction(self.label, self.construction)


@dataclass(frozen=True)
class StackRecipe:
    """An ordered stack of passes; labels may not repeat."""
    steps: tuple
    profile: str = ""

    def __post_init__(self):
        labels = [s.label for s in self.steps]
        if len(set(labels)) != len(labels):
            raise ValueError(f"recipe repeats a label: {labels}")

    @property
    def labels(self) -> tuple:
        return tuple(s.label for s in self.steps)

    def describe(self) -> str:
        return "+".join(self.labels) or CLEAN


@dataclass(frozen=True)
class Sample:
    function: Function
    labels: frozenset
    construction_labels: dict
    functionality_tag: str
    seed: int
    recipe: StackRecipe


@dataclass(frozen=True)
class CorpusConfig:
    recipes: tuple
    per_cell: int
    master_seed: int
    families: tuple = FAMILY_NAMES


_TIGRESS_STACKS = (
    ("AddO",),
    ("AddO", "EncL"),
    ("EncL",),
    ("AddO", "EncA"),
    ("EncA", "AddO"),
    ("EncA",),
    ("AddO", "EncD"),
    ("EncD", "AddO"),
    ("EncD",),
    ("AddO", "EncA", "EncL", "EncD"),
    ("EncD", "EncA", "EncL", "AddO"),
    ("AddO", "Flat"),
    ("Flat", "AddO"),
    ("Flat",),
    ("Flat", "EncD", "EncA", "EncL"),
    ("Virt", "AddO"),
    ("Virt",),
    ("Virt", "EncD", "EncA", "EncL"),
    ("Virt", "Flat"),
    ("Flat", "AddO", "EncD", "EncA", "EncL"),
    ("Virt", "AddO", "EncD", "EncA", "EncL"),
    ("Virt", "Flat", "AddO", "EncD", "EncA", "EncL"),
)

_OLLVM_STACKS = (
    ("bcf",),
    ("bcf", "sub"),
    ("bcf", "sub", "fla"),
    ("bcf", "fla", "sub"),
    ("sub",),
    ("sub", "bcf"),
    ("sub", "bcf", "fla"),
    ("fla",),
    ("fla", "bcf"),
    ("fla", "sub", "bcf"),
    ("fla", "bcf", "sub"),
)

# bcf's stock predicate is the arithmetic x*(x+1) mod 2 construction
_OLLVM_STEPS = {
    "bcf": RecipeStep("AddO", "arithmetic"),
    "sub": RecipeStep("Sub"),
    "fla": RecipeStep("Flat", "switch_based"),
}


def stock_recipes(profile: str) -> list:
    if profile not in PROFILES:
        raise ValueError(f"unknown obfuscator profile {profile!r}")
    tigress = [StackRecipe(tuple(RecipeStep(lb) for lb in stack),
                           "tigress_like")
               for stack in _TIGRESS_STACKS]
    ollvm = [StackRecipe(tuple(_OLLVM_STEPS[k] for k in stack), "ollvm_like")
             for stack in _OLLVM_STACKS]
    if profile == "tigress_like":
        return tigress
    if profile == "ollvm_like":
        return ollvm
    return tigress + ollvm


def _derive(*parts) -> int:
    payload = "\x1f".join(str(p) for p in parts).encode()
    return int.from_bytes(hashlib.sha256(payload).digest()[:8], "big")


def _step_call(step: RecipeStep, index: int, prng: random.Random):
    """Resolve the construction and keyword arguments for one step."""
    options = CONSTRUCTIONS[step.label]
    construction = step.construction or options[index % len(options)]
    params = dict(step.params)
    if step.label == "AddO":
        params.setdefault("count", prng.choice(OPAQUE_COUNTS))
        params.setdefault("constructions", [construction])
    elif step.label == "EncD":
        params.setdefault("codec", construction)
    elif step.label in ("Flat", "Virt"):
        params.setdefault("construction", construction)
    return params, construction


def _check_preserves(original: Function, obfuscated: Function, arity: int,
                     seed: int, tuples: int = PRESERVE_TUPLES):
    plain, obf = FunctionRunner(original), FunctionRunner(obfuscated)
    rng = random.Random(_derive(seed, "preserve"))
    for _ in range(tuples):
        args = [rng.getrandbits(64) for _ in range(arity)]
        want = plain.run(list(args)).value
        got = obf.run(list(args)).value
        if want != got:
            raise RuntimeError(
                f"semantics diverged on {args}: {want} != {got}")


def _build_sample(family: str, recipe: StackRecipe, index: int,
                  seed: int) -> Sample:
    fn, _ = build_family(family, random.Random(_derive(seed, "family")))
    g = fn
    labels = set()
    constructions = {}
    for si, step in enumerate(recipe.steps):
        prng = random.Random(_derive(seed, "step", si))
        params, construction = _step_call(step, index, prng)
        before = print_function(g)
        try:
            g = apply_pass(g, step.label, PassContext(prng), params)
        except TransformError as exc:
            raise RecipeFailure(f"{step.label}: {exc}") from exc
        if print_function(g) == before:
            raise RecipeFailure(f"{step.label} left the function unchanged")
        labels.add(step.label)
        constructions[step.label] = construction

    errors = validate_function(g)
    if errors:
        raise RuntimeError(f"invalid output for {recipe.describe()}: {errors}")
    _check_preserves(fn, g, FAMILIES[family].arity, seed)
    if not labels:
        return Sample(g, frozenset({CLEAN}), {}, family, seed, recipe)
    return Sample(g, frozenset(labels), constructions, family, seed, recipe)


def generate_corpus(config: CorpusConfig) -> list:
    """Deterministic, recipe-balanced sample list.

    Failed cells retry under fresh derived seeds a bounded number of
    times; family assignment rotates with a per-recipe phase so every
    family reaches every cell once per_cell covers the family count.
    """
    if config.per_cell < 1:
        raise ValueError("per_cell must be at least 1")
    if len(config.families) < 2:
        raise ValueError("need at least 2 families")
    for name in config.families:
        if name not in FAMILIES:
            raise ValueError(f"unknown family {name!r}")
    samples = []
    nfam = len(config.families)
    for ri, recipe in enumerate(config.recipes):
        for j in range(config.per_cell):
            family = config.families[(j + ri) % nfam]
            last = None
            for attempt in range(MAX_ATTEMPTS):
                seed = _derive(config.master_seed, "cell", ri, j, attempt)
                try:
                    samples.append(_build_sample(family, recipe, j, seed))
                    break
                except RecipeFailure as exc:
                    last = exc
            else:
                raise RecipeFailure(
                    f"cell (recipe {recipe.describe()}, {family}) failed "
                    f"{MAX_ATTEMPTS} attempts: {last}")
    return samples


def original_function(sample: Sample) -> Function:
    """Rebuild the pre-obfuscation variant this sample started from."""
    fn, _ = build_family(sample.functionality_tag,
                         random.Random(_derive(sample.seed, "family")))
    return fn


def label_support(samples) -> dict:
    support = {}
    for s in samples:
        for lb in s.labels:
            support[lb] = support.get(lb, 0) + 1
    return dict(sorted(support.items()))


def _recipe_record(recipe: StackRecipe) -> dict:
    return {
        "profile": recipe.profile,
        "steps": [{"label": s.label, "construction": s.construction,
                   "params": dict(s.params)} for s in recipe.steps],
    }


def _recipe_from_record(rec: dict) -> StackRecipe:
    steps = tuple(RecipeStep(s["label"], s["construction"],
                             tuple(s["params"].items()))
                  for s in rec["steps"])
    return StackRecipe(steps, rec["profile"])


def write_corpus(samples, outdir) -> Path:
    """One MIR text file per sample plus a manifest; returns the
    manifest path. Rewrites are byte-stable for equal inputs."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    records = []
    for i, s in enumerate(samples):
        fname = f"sample_{i:05d}.mir"
        (outdir / fname).write_text(print_function(s.function))
        records.append({
            "file": fname,
            "labels": sorted(s.labels),
            "constructions": dict(sorted(s.construction_labels.items())),
            "functionality": s.functionality_tag,
            "seed": s.seed,
            "recipe": _recipe_record(s.recipe),
        })
    manifest = outdir / MANIFEST_NAME
    manifest.write_text(json.dumps(records, indent=1, sort_keys=True) + "\n")
    return manifest


def read_corpus(outdir) -> list:
    outdir = Path(outdir)
    records = json.loads((outdir / MANIFEST_NAME).read_text())
    samples = []
    for rec in records:
        try:
            fn = parse_function((outdir / rec["file"]).read_text())
        except MirError as exc:
            raise MalformedIR(f"{rec['file']}: {exc}") from exc
        samples.append(Sample(
            fn, frozenset(rec["labels"]), dict(rec["constructions"]),
            rec["functionality"], rec["seed"],
            _recipe_from_record(rec["recipe"])))
    return samples
