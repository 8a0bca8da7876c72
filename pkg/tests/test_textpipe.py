"""Tokenizer, dictionary, information gain and vectorizer contracts."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spiderlab.textpipe import (
    Dictionary,
    TermVector,
    build_dictionary,
    information_gain,
    information_gain_select,
    tokenize,
    vectorize,
)

WORDS = st.text(alphabet="abcdefghijklmnopqrstuvwxyz", min_size=2, max_size=10)


class TestTokenize:
    def test_domain_phrase(self):
        assert tokenize("Estrogen plays roles!") == ["estrogen", "plai", "role"]

    def test_all_stopwords(self):
        assert tokenize("the of and") == []

    def test_empty(self):
        assert tokenize("") == []

    def test_length_and_digit_filters(self):
        assert tokenize("a x 12345 ok " + "z" * 41) == ["ok"]

    def test_splits_on_non_alphanumerics(self):
        assert tokenize("foo-bar_baz/qux") == ["foo", "bar", "baz", "qux"]

    def test_stopwords_removed_post_stemming(self):
        # "being" stems to "be", which is a stopword stem
        assert tokenize("being") == []

    def test_idempotent_on_corpus_vocabulary(self):
        text = " ".join(f"w{i:05d}" for i in range(50)) + " tmark01 tmark02"
        once = tokenize(text)
        assert tokenize(" ".join(once)) == once

    def test_idempotent_on_common_english(self):
        text = (
            "estrogen plays several important roles in the human body "
            "including regulation of hormonal cycles bone density and "
            "reproductive system development according to many studies"
        )
        once = tokenize(text)
        assert tokenize(" ".join(once)) == once


class TestDictionary:
    def test_build_counts_df(self):
        d = build_dictionary([["a", "b"], ["b", "c"]])
        assert len(d) == 3
        assert d.df("a") == 1 and d.df("b") == 2 and d.df("c") == 1
        assert d.total_docs == 2

    def test_empty_docs(self):
        d = build_dictionary([])
        assert len(d) == 0 and d.total_docs == 0

    def test_df_counts_each_doc_once(self):
        d = build_dictionary([["a", "a"]])
        assert d.df("a") == 1

    def test_first_appearance_indexing(self):
        d = build_dictionary([["b", "a"], ["a", "c"]])
        assert [d.index_of(t) for t in ("b", "a", "c")] == [0, 1, 2]

    def test_save_load_roundtrip(self, tmp_path):
        d = build_dictionary([["a", "b"], ["b", "c"]])
        path = tmp_path / "dict.tsv"
        d.save(path)
        back = Dictionary.load(path)
        assert back.terms() == d.terms()
        assert back.total_docs == d.total_docs
        assert [back.df_at(i) for i in range(len(back))] == [d.df_at(i) for i in range(len(d))]


def _entropy(*counts: int) -> float:
    total = sum(counts)
    return -sum(c / total * math.log2(c / total) for c in counts if c)


class TestInformationGain:
    def test_perfectly_predictive_term_is_one_bit(self):
        docs = [["x", "f"], ["x"], ["f"], ["g"]]
        labels = [True, True, False, False]
        d = build_dictionary(docs)
        gains = information_gain(d, docs, labels)
        assert gains[d.index_of("x")] == pytest.approx(1.0, abs=1e-12)

    def test_term_in_every_doc_has_zero_gain(self):
        docs = [["x", "a"], ["x"], ["x", "b"], ["x"]]
        labels = [True, True, False, False]
        d = build_dictionary(docs)
        assert information_gain(d, docs, labels)[d.index_of("x")] == pytest.approx(0.0, abs=1e-12)

    def test_hand_computed_contingency(self):
        # term in docs 0,1,3 of 5; labels: 3 positive, 2 negative
        docs = [["t"], ["t", "z"], ["z"], ["t"], ["z"]]
        labels = [True, True, True, False, False]
        d = build_dictionary(docs)
        # presence/label table for t: a=2 (present,pos), b=1 (present,neg),
        # c=1 (absent,pos), d=1 (absent,neg)
        expected = _entropy(3, 2) - (3 / 5 * _entropy(2, 1) + 2 / 5 * _entropy(1, 1))
        assert information_gain(d, docs, labels)[d.index_of("t")] == pytest.approx(
            expected, abs=1e-12
        )

    def test_select_top_k_reindexes_by_gain(self):
        docs = [["x", "y", "z"], ["x", "y"], ["y", "z"], ["z", "y"]]
        labels = [True, True, False, False]
        d = build_dictionary(docs)
        out = information_gain_select(d, docs, labels, 2)
        assert len(out) == 2
        assert out.index_of("x") == 0  # perfect predictor ranks first
        assert out.total_docs == d.total_docs
        assert out.df("x") == d.df("x")

    def test_k_larger_than_dictionary_keeps_everything(self):
        docs = [["a", "b"], ["b"]]
        labels = [True, False]
        d = build_dictionary(docs)
        out = information_gain_select(d, docs, labels, 99)
        assert set(out.terms()) == {"a", "b"}

    def test_ties_break_by_original_index(self):
        # a and b have identical presence patterns, so identical gain
        docs = [["a", "b"], ["c"]]
        labels = [True, False]
        d = build_dictionary(docs)
        out = information_gain_select(d, docs, labels, 3)
        assert out.index_of("a") < out.index_of("b")

    def test_doc_permutation_does_not_change_selection(self):
        rng = np.random.default_rng(0)
        docs = [["a", "b"], ["b", "c"], ["c"], ["a"], ["b"], ["a", "c"]]
        labels = [True, False, True, False, True, False]
        d = build_dictionary(docs)
        base = set(information_gain_select(d, docs, labels, 2).terms())
        for _ in range(5):
            perm = rng.permutation(len(docs))
            docs2 = [docs[i] for i in perm]
            labels2 = [labels[i] for i in perm]
            d2 = build_dictionary(docs2)
            assert set(information_gain_select(d2, docs2, labels2, 2).terms()) == base

    @given(st.lists(st.tuples(st.lists(WORDS, max_size=6), st.booleans()), min_size=1, max_size=12))
    @settings(max_examples=50, deadline=None)
    def test_gain_never_negative(self, labeled_docs):
        docs = [doc for doc, _ in labeled_docs]
        labels = [lab for _, lab in labeled_docs]
        d = build_dictionary(docs)
        if len(d) == 0:
            return
        assert np.all(information_gain(d, docs, labels) >= 0.0)


class TestVectorize:
    def setup_method(self):
        self.dict2 = build_dictionary([["a", "b"]])

    def test_counts_and_normalization(self):
        v = vectorize(["a", "a", "b"], self.dict2)
        assert v.pairs() == [
            (0, pytest.approx(2 / math.sqrt(5))),
            (1, pytest.approx(1 / math.sqrt(5))),
        ]

    def test_out_of_dictionary_only_gives_empty(self):
        v = vectorize(["z"], self.dict2)
        assert v.is_empty

    def test_unit_case(self):
        v = vectorize(["a"], self.dict2)
        assert v.pairs() == [(0, pytest.approx(1.0))]

    def test_empty_dictionary_rejected(self):
        with pytest.raises(ValueError):
            vectorize(["a"], Dictionary())

    @given(st.lists(WORDS, min_size=1, max_size=30))
    @settings(max_examples=60, deadline=None)
    def test_duplicating_tokens_leaves_vector_unchanged(self, tokens):
        d = build_dictionary([tokens])
        v1 = vectorize(tokens, d)
        v2 = vectorize(tokens + tokens, d)
        assert v1.pairs() == pytest.approx(v2.pairs())

    @given(st.lists(WORDS, min_size=1, max_size=30))
    @settings(max_examples=60, deadline=None)
    def test_nonempty_vectors_are_unit_norm(self, tokens):
        d = build_dictionary([tokens])
        v = vectorize(tokens, d)
        assert abs(v.norm() - 1.0) < 1e-9
