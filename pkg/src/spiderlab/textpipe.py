"""Text to sparse-vector pipeline.

Pages enter as raw strings and leave as unit-length sparse term-frequency
vectors.  The stages are: tokenize (lowercase, split, length/digit filter,
Porter stem, stopword removal), build a dictionary with document
frequencies, optionally shrink the dictionary by information gain against
a boolean label, and vectorize token lists against the final dictionary.

The shipped stopword list is stemmed before use so that lookups happen in
stem space.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import porter

_SPLIT = re.compile(r"[^0-9a-z]+")
_MIN_TOKEN_LEN = 2
_MAX_TOKEN_LEN = 40


def _load_stopword_stems() -> frozenset[str]:
    text = resources.files("spiderlab").joinpath("data/stopwords.txt").read_text("utf-8")
    return frozenset(porter.stem(w) for w in text.split())


_STOPWORD_STEMS = _load_stopword_stems()


def tokenize(text: str) -> list[str]:
    """Normalize raw text into a list of stemmed, stopword-free tokens.

    Lowercases, splits on runs of non-alphanumerics, drops tokens shorter
    than 2 or longer than 40 characters and pure-digit tokens, stems the
    rest, and removes tokens whose stem is a stopword stem.  Stems that
    come out shorter than 2 characters are dropped as well, so the
    pipeline is idempotent on its own output.
    """
    out = []
    for tok in _SPLIT.split(text.lower()):
        n = len(tok)
        if n < _MIN_TOKEN_LEN or n > _MAX_TOKEN_LEN:
            continue
        if tok.isdigit():
            continue
        stemmed = porter.stem(tok)
        if len(stemmed) < _MIN_TOKEN_LEN or stemmed in _STOPWORD_STEMS:
            continue
        out.append(stemmed)
    return out


@dataclass(eq=False)
class TermVector:
    """Sparse unit-norm vector: parallel arrays of ascending unique indices
    and strictly positive weights.  The empty vector has length-0 arrays."""

    indices: np.ndarray
    weights: np.ndarray

    def __len__(self) -> int:
        return len(self.indices)

    @property
    def is_empty(self) -> bool:
        return len(self.indices) == 0

    def pairs(self) -> list[tuple[int, float]]:
        return [(int(i), float(w)) for i, w in zip(self.indices, self.weights)]

    def norm(self) -> float:
        return float(np.sqrt(np.dot(self.weights, self.weights)))

    @staticmethod
    def empty() -> "TermVector":
        return TermVector(np.empty(0, dtype=np.int32), np.empty(0, dtype=np.float64))

    @staticmethod
    def from_pairs(pairs: Iterable[tuple[int, float]]) -> "TermVector":
        items = sorted(pairs)
        idx = np.array([i for i, _ in items], dtype=np.int32)
        wts = np.array([w for _, w in items], dtype=np.float64)
        return TermVector(idx, wts)


class Dictionary:
    """Term -> dense feature index map with per-term document frequencies.

    Indices are 0..len-1 with no gaps.  Terms are assumed already stemmed
    and stopword-free (they come out of :func:`tokenize`).
    """

    def __init__(self) -> None:
        self._index: dict[str, int] = {}
        self._terms: list[str] = []
        self._df: list[int] = []
        self.total_docs: int = 0

    def __len__(self) -> int:
        return len(self._terms)

    def __contains__(self, term: str) -> bool:
        return term in self._index

    def index_of(self, term: str) -> int | None:
        return self._index.get(term)

    def term_at(self, index: int) -> str:
        return self._terms[index]

    def terms(self) -> list[str]:
        return list(self._terms)

    def df(self, term: str) -> int:
        return self._df[self._index[term]]

    def df_at(self, index: int) -> int:
        return self._df[index]

    def _add(self, term: str, df: int) -> None:
        self._index[term] = len(self._terms)
        self._terms.append(term)
        self._df.append(df)

    def save(self, path: str | Path) -> None:
        """Write as TSV: a header line with the document count, then one
        ``term<TAB>index<TAB>df`` line per term."""
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"docs\t{self.total_docs}\n")
            for i, term in enumerate(self._terms):
                fh.write(f"{term}\t{i}\t{self._df[i]}\n")

    @staticmethod
    def load(path: str | Path) -> "Dictionary":
        d = Dictionary()
        with open(path, "r", encoding="utf-8") as fh:
            header = fh.readline().rstrip("\n").split("\t")
            if len(header) != 2 or header[0] != "docs":
                raise ValueError(f"{path}: not a dictionary file (bad header)")
            d.total_docs = int(header[1])
            for lineno, line in enumerate(fh, start=2):
                parts = line.rstrip("\n").split("\t")
                if len(parts) != 3:
                    raise ValueError(f"{path}:{lineno}: expected term/index/df")
                term, idx, df = parts[0], int(parts[1]), int(parts[2])
                if idx != len(d._terms):
                    raise ValueError(f"{path}:{lineno}: indices must be dense and ascending")
                d._add(term, df)
        return d


def build_dictionary(docs: Sequence[Sequence[str]]) -> Dictionary:
    """Build a dictionary over tokenized documents.

    Feature indices follow first appearance order; document frequency
    counts each document at most once per term.
    """
    d = Dictionary()
    for doc in docs:
        d.total_docs += 1
        seen: set[str] = set()
        for term in doc:
            if term in seen:
                continue
            seen.add(term)
            i = d._index.get(term)
            if i is None:
                d._add(term, 1)
            else:
                d._df[i] += 1
    return d


def _entropy_bits(counts: Sequence[int]) -> float:
    total = sum(counts)
    if total == 0:
        return 0.0
    h = 0.0
    for c in counts:
        if c:
            p = c / total
            h -= p * math.log2(p)
    return h


def information_gain(
    dictionary: Dictionary,
    docs: Sequence[Sequence[str]],
    labels: Sequence[bool],
) -> np.ndarray:
    """Per-term information gain of binary term presence about the label.

    IG(term) = H(label) - H(label | term present/absent), in bits.
    """
    if len(docs) != len(labels):
        raise ValueError("docs and labels must have equal length")
    n = len(docs)
    if n == 0:
        raise ValueError("need at least one labeled document")
    n_terms = len(dictionary)
    pos_with = np.zeros(n_terms, dtype=np.int64)
    neg_with = np.zeros(n_terms, dtype=np.int64)
    n_pos = 0
    for doc, label in zip(docs, labels):
        if label:
            n_pos += 1
        seen = {dictionary.index_of(t) for t in set(doc)}
        seen.discard(None)
        idx = np.fromiter(seen, dtype=np.int64, count=len(seen))
        if label:
            pos_with[idx] += 1
        else:
            neg_with[idx] += 1
    n_neg = n - n_pos
    h_label = _entropy_bits((n_pos, n_neg))

    gains = np.zeros(n_terms, dtype=np.float64)
    for t in range(n_terms):
        a = int(pos_with[t])           # present, positive
        b = int(neg_with[t])           # present, negative
        c = n_pos - a                  # absent, positive
        d = n_neg - b                  # absent, negative
        n_with = a + b
        n_without = c + d
        h_cond = (
            n_with / n * _entropy_bits((a, b))
            + n_without / n * _entropy_bits((c, d))
        )
        gains[t] = h_label - h_cond
    # clamp tiny negative rounding residue
    np.maximum(gains, 0.0, out=gains)
    return gains


def information_gain_select(
    dictionary: Dictionary,
    docs: Sequence[Sequence[str]],
    labels: Sequence[bool],
    k: int,
) -> Dictionary:
    """Keep the k terms most informative about the label.

    The returned dictionary is re-indexed densely in descending gain
    order; ties break toward the lower original index.  Document
    frequencies and the document count carry over.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    gains = information_gain(dictionary, docs, labels)
    order = sorted(range(len(dictionary)), key=lambda t: (-gains[t], t))
    kept = order[: min(k, len(order))]
    out = Dictionary()
    out.total_docs = dictionary.total_docs
    for t in kept:
        out._add(dictionary.term_at(t), dictionary.df_at(t))
    return out


def vectorize(tokens: Sequence[str], dictionary: Dictionary) -> TermVector:
    """Count in-dictionary tokens and L2-normalize.

    Out-of-dictionary tokens are ignored; if nothing matches the result is
    the empty vector.
    """
    if len(dictionary) == 0:
        raise ValueError("cannot vectorize against an empty dictionary")
    counts: dict[int, int] = {}
    index = dictionary._index
    for tok in tokens:
        i = index.get(tok)
        if i is not None:
            counts[i] = counts.get(i, 0) + 1
    if not counts:
        return TermVector.empty()
    idx = np.array(sorted(counts), dtype=np.int32)
    wts = np.array([counts[int(i)] for i in idx], dtype=np.float64)
    wts /= np.sqrt(np.dot(wts, wts))
    return TermVector(idx, wts)
