"""Corpus generation: recipes, balance, honesty, serialization."""
import json
import random

import pytest

from obfscan.corpus import (CorpusConfig, MAX_ATTEMPTS, RecipeFailure,
                            RecipeStep, Sample, StackRecipe, generate_corpus,
                            label_support, original_function, read_corpus,
                            stock_recipes, write_corpus)
from obfscan.families import FAMILY_NAMES
from obfscan.mir import FunctionRunner, print_function, validate_function

CHEAP = (
    StackRecipe((RecipeStep("AddO"), RecipeStep("EncL"))),
    StackRecipe((RecipeStep("EncA"),)),
    StackRecipe((RecipeStep("EncD"), RecipeStep("Sub"))),
)


def test_stock_recipe_counts_and_provenance():
    tig = stock_recipes("tigress_like")
    oll = stock_recipes("ollvm_like")
    mix = stock_recipes("mixed")
    assert len(tig) == 22 and len(oll) == 11 and len(mix) == 33
    assert all(r.profile == "tigress_like" for r in tig)
    assert all(r.profile == "ollvm_like" for r in oll)
    assert mix == tig + oll
    assert ("Virt", "Flat", "AddO", "EncD", "EncA", "EncL") in [
        r.labels for r in tig]
    for r in mix:
        assert len(set(r.labels)) == len(r.labels)


def test_stock_recipes_pin_ollvm_constructions():
    for r in stock_recipes("ollvm_like"):
        for step in r.steps:
            if step.label == "AddO":
                assert step.construction == "arithmetic"
            elif step.label == "Flat":
                assert step.construction == "switch_based"
            else:
                assert step.label == "Sub"


def test_stock_recipes_rejects_unknown_profile():
    with pytest.raises(ValueError):
        stock_recipes("binaryen_like")


def test_recipe_validation():
    with pytest.raises(ValueError):
        RecipeStep("Huff")
    with pytest.raises(ValueError):
        RecipeStep("Flat", "goto_based")
    with pytest.raises(ValueError):
        StackRecipe((RecipeStep("EncA"), RecipeStep("EncA")))


def test_config_validation():
    r = (CHEAP[1],)
    with pytest.raises(ValueError):
        generate_corpus(CorpusConfig(r, per_cell=0, master_seed=1))
    with pytest.raises(ValueError):
        generate_corpus(CorpusConfig(r, 2, 1, families=("gcd",)))
    with pytest.raises(ValueError):
        generate_corpus(CorpusConfig(r, 2, 1, families=("gcd", "quine")))


def test_generate_balanced_and_valid():
    cfg = CorpusConfig(CHEAP, per_cell=5, master_seed=3)
    samples = generate_corpus(cfg)
    assert len(samples) == 15
    for i, recipe in enumerate(CHEAP):
        cell = samples[i * 5:(i + 1) * 5]
        assert all(s.recipe == recipe for s in cell)
        for s in cell:
            assert validate_function(s.function) == []
            assert s.labels == frozenset(recipe.labels)
            assert set(s.construction_labels) == set(recipe.labels)
            assert s.functionality_tag == s.function.functionality_tag


def test_family_rotation_covers_all_families():
    cfg = CorpusConfig(CHEAP[:2], per_cell=len(FAMILY_NAMES), master_seed=11)
    samples = generate_corpus(cfg)
    per_recipe = len(FAMILY_NAMES)
    for i in range(2):
        cell = samples[i * per_recipe:(i + 1) * per_recipe]
        assert {s.functionality_tag for s in cell} == set(FAMILY_NAMES)


def test_clean_recipe_yields_clean_samples():
    cfg = CorpusConfig((StackRecipe(()),), per_cell=4, master_seed=5)
    samples = generate_corpus(cfg)
    for s in samples:
        assert s.labels == frozenset({"Clean"})
        assert s.construction_labels == {}
        # untouched: identical to the rebuilt original
        assert print_function(s.function) == print_function(
            original_function(s))


def test_samples_preserve_original_semantics():
    cfg = CorpusConfig((CHEAP[0],), per_cell=4, master_seed=21)
    for s in generate_corpus(cfg):
        fn = original_function(s)
        plain, obf = FunctionRunner(fn), FunctionRunner(s.function)
        rng = random.Random(s.seed & 0xffff)
        arity = len(fn.params)
        for _ in range(8):
            args = [rng.getrandbits(64) for _ in range(arity)]
            assert plain.run(list(args)).value == obf.run(list(args)).value


def test_generation_is_deterministic():
    cfg = CorpusConfig(CHEAP, per_cell=3, master_seed=17)
    a = generate_corpus(cfg)
    b = generate_corpus(cfg)
    assert [print_function(s.function) for s in a] == \
           [print_function(s.function) for s in b]
    assert [s.seed for s in a] == [s.seed for s in b]


def test_noop_step_exhausts_retries():
    silent = StackRecipe((RecipeStep("Sub", params=(("density", 0.0),)),))
    cfg = CorpusConfig((silent,), per_cell=1, master_seed=2)
    with pytest.raises(RecipeFailure, match=f"{MAX_ATTEMPTS} attempts"):
        generate_corpus(cfg)


def test_construction_rotation_spreads_variants():
    virt = StackRecipe((RecipeStep("Virt"),))
    cfg = CorpusConfig((virt,), per_cell=3, master_seed=9)
    samples = generate_corpus(cfg)
    assert {s.construction_labels["Virt"] for s in samples} == {
        "switch_dispatch", "linear_dispatch", "ifnest_dispatch"}


def test_write_read_round_trip(tmp_path):
    cfg = CorpusConfig(CHEAP, per_cell=2, master_seed=13)
    samples = generate_corpus(cfg)
    manifest = write_corpus(samples, tmp_path / "corpus")
    records = json.loads(manifest.read_text())
    assert len(records) == len(samples)
    assert all((tmp_path / "corpus" / r["file"]).exists() for r in records)
    back = read_corpus(tmp_path / "corpus")
    for s, t in zip(samples, back):
        assert print_function(s.function) == print_function(t.function)
        assert s.labels == t.labels
        assert s.construction_labels == t.construction_labels
        assert s.functionality_tag == t.functionality_tag
        assert s.seed == t.seed
        assert s.recipe == t.recipe
    # byte-stable for equal inputs
    m2 = write_corpus(generate_corpus(cfg), tmp_path / "again")
    assert manifest.read_bytes() == m2.read_bytes()


def test_label_support_counts():
    cfg = CorpusConfig(CHEAP, per_cell=2, master_seed=4)
    support = label_support(generate_corpus(cfg))
    assert support == {"AddO": 2, "EncA": 2, "EncD": 2, "EncL": 2, "Sub": 2}
