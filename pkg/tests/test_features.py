"""Tokenizer and term-frequency vectorizer behavior."""
import numpy as np
import pytest

from obfscan.corpus import CorpusConfig, RecipeStep, StackRecipe, generate_corpus
from obfscan.features import (EmptyCorpus, TermFrequencyVectorizer, Vocabulary,
                              fit_vocabulary, load_matrix, load_vocabulary,
                              save_matrix, save_vocabulary, tokenize,
                              transform)
from obfscan.normalize import RawDocument, corpus_to_rawdata


def test_tokenize_splits_on_non_alphanumerics():
    # glyphed operator forms split apart, which is why featurized text
    # uses fully alphanumeric operator words instead
    assert tokenize("REG3 = ExprOp(op+, REG0, v2)") == [
        "REG3", "ExprOp", "op", "REG0", "v2"]
    assert tokenize("REG3 = ExprOp(opadd, REG0, v2)") == [
        "REG3", "ExprOp", "opadd", "REG0", "v2"]
    assert tokenize("") == []
    assert tokenize("v2,v2") == ["v2", "v2"]
    assert tokenize(RawDocument("a_b\n")) == ["a", "b"]


def test_fit_vocabulary_sorted_union():
    vocab = fit_vocabulary([RawDocument("a b\n"), RawDocument("b c\n")])
    assert vocab.tokens == ("a", "b", "c")
    assert fit_vocabulary([RawDocument("x x x\n")]).tokens == ("x",)


def test_fit_vocabulary_deterministic_fingerprint():
    docs = [RawDocument("a b\n"), RawDocument("c\n")]
    v1, v2 = fit_vocabulary(docs), fit_vocabulary(docs)
    assert v1.tokens == v2.tokens
    assert v1.built_from == v2.built_from
    assert v1.fingerprint == v2.fingerprint
    other = fit_vocabulary([RawDocument("a b d\n")])
    assert other.fingerprint != v1.fingerprint


def test_fit_vocabulary_rejects_empty():
    with pytest.raises(EmptyCorpus):
        fit_vocabulary([])
    with pytest.raises(EmptyCorpus):
        fit_vocabulary([RawDocument(""), RawDocument("...")])


def test_transform_term_frequencies_exact():
    vocab = fit_vocabulary([RawDocument("REG0 op v1\n")])
    fv = transform(RawDocument("REG0 op REG0 v1\n"), vocab)
    assert vocab.tokens == ("REG0", "op", "v1")
    assert np.array_equal(fv.weights, np.array([0.5, 0.25, 0.25]))
    assert fv.oov_rate == 0.0


def test_transform_oov_and_empty():
    vocab = Vocabulary(("a", "b"))
    allout = transform(RawDocument("x y z\n"), vocab)
    assert np.array_equal(allout.weights, np.zeros(2))
    assert allout.oov_rate == 1.0
    part = transform(RawDocument("a x\n"), vocab)
    assert np.array_equal(part.weights, np.array([0.5, 0.0]))
    assert part.oov_rate == 0.5
    empty = transform(RawDocument(""), vocab)
    assert np.array_equal(empty.weights, np.zeros(2))
    assert empty.oov_rate == 0.0


def test_bag_of_words_order_invariance():
    vocab = fit_vocabulary([RawDocument("a b c\n")])
    x = transform(RawDocument("a b\nc a\n"), vocab)
    y = transform(RawDocument("c a\na b\n"), vocab)
    assert np.array_equal(x.weights, y.weights)


def test_vocabulary_monotone_under_more_docs():
    small = fit_vocabulary([RawDocument("a b\n")])
    large = fit_vocabulary([RawDocument("a b\n"), RawDocument("z q\n")])
    assert set(small.tokens) <= set(large.tokens)


def test_vectorizer_on_generated_documents():
    recipes = (StackRecipe((RecipeStep("EncA"),)), StackRecipe(()))
    samples = generate_corpus(CorpusConfig(recipes, 4, master_seed=33))
    docs = corpus_to_rawdata(samples)
    vec = TermFrequencyVectorizer()
    X = vec.fit_transform(docs)
    assert X.shape == (len(docs), len(vec.vocabulary_))
    assert np.all(X >= 0)
    # the fit set is fully in vocabulary: rows are L1-normalized
    assert np.allclose(X.sum(axis=1), 1.0, atol=1e-12, rtol=0)
    assert np.array_equal(vec.oov_rates_, np.zeros(len(docs)))
    again = TermFrequencyVectorizer().fit_transform(docs)
    assert np.array_equal(X, again)


def test_vectorizer_estimator_protocol():
    vec = TermFrequencyVectorizer()
    assert vec.get_params() == {}
    assert vec.set_params() is vec
    with pytest.raises(ValueError):
        vec.set_params(ngrams=2)
    with pytest.raises(RuntimeError):
        vec.transform([RawDocument("a\n")])


def test_vocabulary_round_trip(tmp_path):
    vocab = fit_vocabulary([RawDocument("b a\n"), RawDocument("c\n")])
    path = save_vocabulary(vocab, tmp_path / "vocab.txt")
    back = load_vocabulary(path)
    assert back.tokens == vocab.tokens
    assert back.fingerprint == vocab.fingerprint


def test_matrix_round_trip_exact(tmp_path):
    vocab = fit_vocabulary([RawDocument("a b c\n")])
    X = np.array([[1 / 3, 1 / 3, 1 / 3], [0.7, 0.2, 0.1]])
    path = save_matrix(X, vocab, tmp_path / "X.tsv")
    back, header = load_matrix(path)
    assert header == vocab.tokens
    assert np.array_equal(back, X)
    empty = save_matrix(np.zeros((0, 3)), vocab, tmp_path / "e.tsv")
    back2, header2 = load_matrix(empty)
    assert back2.shape == (0, 3) and header2 == vocab.tokens
