"""Shared builders and independent oracles for the test suite.

The BFS oracle here is deliberately written against the raw page records
with a plain deque walk, sharing nothing with the library's vectorized
frontier code, so the two can check each other.
"""

from __future__ import annotations

import json
from collections import deque

import numpy as np
import pytest

from spiderlab.graphstore import PageRecord, TargetSet, WebGraph


def graph_from_edges(n: int, edges: list[tuple[int, int]], texts: list[str] | None = None) -> WebGraph:
    """Build a WebGraph directly from an edge list (ids 0..n-1)."""
    outlinks: list[list[int]] = [[] for _ in range(n)]
    for u, v in edges:
        if v not in outlinks[u]:
            outlinks[u].append(v)
    pages = [
        PageRecord(i, f"u{i}", texts[i] if texts else "", outlinks[i])
        for i in range(n)
    ]
    return WebGraph(pages, dropped_links=0)


def random_graph(rng: np.random.Generator, n: int, mean_out: float = 3.0) -> WebGraph:
    """Random digraph with Poisson out-degrees, no self loops."""
    edges = []
    for u in range(n):
        k = int(rng.poisson(mean_out))
        if k:
            for v in rng.integers(0, n, size=k):
                if int(v) != u:
                    edges.append((u, int(v)))
    return graph_from_edges(n, edges)


def oracle_min_distance(g: WebGraph, node: int, targets: set[int], cap: int) -> int | None:
    """Forward BFS from one node, stopping at the first target level."""
    if node in targets:
        return 0
    seen = {node}
    frontier = deque([node])
    depth = 0
    while frontier and depth < cap:
        depth += 1
        for _ in range(len(frontier)):
            u = frontier.popleft()
            for v in g.page(u).outlinks:
                if v in seen:
                    continue
                if v in targets:
                    return depth
                seen.add(v)
                frontier.append(v)
    return None


def oracle_distances(g: WebGraph, targets: set[int], cap: int) -> dict[int, int]:
    """Per-node forward-BFS distances to the nearest target, within cap."""
    out = {}
    for node in range(len(g)):
        d = oracle_min_distance(g, node, targets, cap)
        if d is not None:
            out[node] = d
    return out


def oracle_all_target_distances(g: WebGraph, node: int, targets: set[int], cap: int) -> dict[int, int]:
    """Forward BFS recording the distance to every target within cap."""
    found = {}
    if node in targets:
        found[node] = 0
    seen = {node}
    frontier = deque([node])
    depth = 0
    while frontier and depth < cap:
        depth += 1
        for _ in range(len(frontier)):
            u = frontier.popleft()
            for v in g.page(u).outlinks:
                if v in seen:
                    continue
                seen.add(v)
                if v in targets:
                    found[v] = depth
                frontier.append(v)
    return found


def write_corpus_files(tmp_path, corpus_text: str, targets_text: str):
    corpus = tmp_path / "corpus.jsonl"
    targets = tmp_path / "targets.json"
    corpus.write_text(corpus_text, encoding="utf-8")
    targets.write_text(targets_text, encoding="utf-8")
    return corpus, targets


@pytest.fixture(scope="session")
def small_corpus(tmp_path_factory):
    """A 1200-page generated corpus with its graph and targets, shared by
    tests that need realistic structure but not acceptance scale."""
    from spiderlab.corpusgen import GenConfig, generate
    from spiderlab.graphstore import load_corpus, load_targets

    cfg = GenConfig(
        n_pages=1200,
        n_topics=4,
        target_fraction=0.15,
        mean_out_degree=4.0,
        topic_affinity=0.8,
        vocab_size=800,
        terms_per_page=60,
        seed=909,
        train_fraction=0.2,
    )
    tmp = tmp_path_factory.mktemp("small_corpus")
    corpus_text, targets_text = generate(cfg)
    corpus, targets = write_corpus_files(tmp, corpus_text, targets_text)
    g = load_corpus(corpus)
    ts = load_targets(targets, g)
    return g, ts, cfg
