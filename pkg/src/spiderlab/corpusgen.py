"""Synthetic corpus generator with planted topical link locality.

Every page gets a topic; a link stays inside its source page's topic
with probability ``topic_affinity`` and otherwise lands in another
topic, either way drawn weighted by current in-degree + 1 (preferential
attachment with smoothing).  Page text mixes a Zipf-shaped background vocabulary with a
topic-specific slice of it, and target pages additionally emit a few
marker terms.  A designated fraction of one topic's pages are ground
truth targets, split into train/test.

Because the whole corpus is a pure function of :class:`GenConfig` (one
seeded generator, fixed draw order: topics and target flags, then texts
in page order, then links in page order, then the out-degree backbone),
two runs with the same config produce byte-identical files.

With ``topic_affinity`` well above ``1 / n_topics`` the link structure
makes target-topic pages sit closer to targets than other pages, which
is the gradient learned spiders are supposed to pick up; setting
``topic_affinity = 1 / n_topics`` removes the signal for negative
controls.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, fields

import numpy as np

from .graphstore import TargetSet, WebGraph, distance_array

_ZIPF_EXPONENT = 1.1
_TOPIC_MIX = 0.55       # probability a token is drawn from the topic slice
_MARKER_RATE = 0.12     # fraction of a target page's tokens replaced by markers
_N_MARKERS = 8
_MAX_REDRAWS = 8        # attempts before giving up on a self/duplicate link


@dataclass(frozen=True)
class GenConfig:
    """Knobs for one synthetic corpus.  Defaults give a 5k-page corpus
    whose depth-from-target page counts grow geometrically over the first
    few depths."""

    n_pages: int = 5000
    n_topics: int = 5
    target_topic: int = 0
    target_fraction: float = 0.04
    mean_out_degree: float = 5.0
    topic_affinity: float = 0.8
    vocab_size: int = 3000
    terms_per_page: int = 120
    seed: int = 20210
    train_fraction: float = 0.1

    def validate(self) -> None:
        if self.n_pages < 1:
            raise ValueError("n_pages must be >= 1")
        if self.n_topics < 1:
            raise ValueError("n_topics must be >= 1")
        if not 0 <= self.target_topic < self.n_topics:
            raise ValueError("target_topic must name a topic")
        if not 0 < self.target_fraction <= 1:
            raise ValueError("target_fraction must be in (0, 1]")
        if self.mean_out_degree <= 0:
            raise ValueError("mean_out_degree must be positive")
        if not 0 <= self.topic_affinity <= 1:
            raise ValueError("topic_affinity must be in [0, 1]")
        if self.vocab_size < self.n_topics:
            raise ValueError("vocab_size must be >= n_topics")
        if self.terms_per_page < 1:
            raise ValueError("terms_per_page must be >= 1")
        if not 0 <= self.train_fraction <= 1:
            raise ValueError("train_fraction must be in [0, 1]")

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def _page_url(i: int) -> str:
    return f"page-{i:06d}"


def _term(i: int) -> str:
    return f"w{i:05d}"


def _marker(i: int) -> str:
    return f"tmark{i:02d}"


def _zipf_cdf(size: int) -> np.ndarray:
    weights = 1.0 / np.power(np.arange(1, size + 1, dtype=np.float64), _ZIPF_EXPONENT)
    cdf = np.cumsum(weights)
    cdf /= cdf[-1]
    return cdf


def _sample_cdf(rng: np.random.Generator, cdf: np.ndarray, k: int) -> np.ndarray:
    return np.searchsorted(cdf, rng.random(k), side="right")


def generate(cfg: GenConfig) -> tuple[str, str]:
    """Produce (corpus file content, targets file content) for a config.

    The corpus is line-delimited JSON in the graphstore format; the
    targets file holds one class named ``topic<target_topic>`` with the
    train split recorded.
    """
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    n = cfg.n_pages

    # 1) topics: even shuffled assignment, so every topic holds n/n_topics
    # pages (up to remainder) and the topic share equals 1/n_topics.
    # 2) target flags and train/test split.
    topics = rng.permutation(np.arange(n) % cfg.n_topics)
    topic_pages = np.nonzero(topics == cfg.target_topic)[0]
    shuffled = rng.permutation(topic_pages)
    n_targets = max(1, int(round(cfg.target_fraction * len(topic_pages)))) if len(topic_pages) else 0
    target_ids = shuffled[:n_targets]
    n_train = int(round(cfg.train_fraction * n_targets))
    train_ids = set(int(i) for i in target_ids[:n_train])
    target_set = set(int(i) for i in target_ids)

    # 3) texts, in page order
    block = cfg.vocab_size // cfg.n_topics
    bg_cdf = _zipf_cdf(cfg.vocab_size)
    topic_cdf = _zipf_cdf(block)
    texts: list[str] = []
    for i in range(n):
        k = cfg.terms_per_page
        from_topic = rng.random(k) < _TOPIC_MIX
        topic_draw = _sample_cdf(rng, topic_cdf, k)
        bg_draw = _sample_cdf(rng, bg_cdf, k)
        base = int(topics[i]) * block
        token_ids = np.where(from_topic, base + topic_draw, bg_draw)
        words = [_term(int(t)) for t in token_ids]
        if i in target_set:
            marked = np.nonzero(rng.random(k) < _MARKER_RATE)[0]
            marker_ids = rng.integers(0, _N_MARKERS, size=len(marked))
            for pos, m in zip(marked, marker_ids):
                words[int(pos)] = _marker(int(m))
        texts.append(" ".join(words))

    # 4) links, in page order, preferential by in-degree + 1.  A link stays
    # inside the source's topic with probability exactly topic_affinity and
    # otherwise lands in some other topic, so topic_affinity = 1/n_topics
    # makes the child's topic independent of the parent's (the no-signal
    # control point) while larger values plant locality.
    global_urn: list[int] = list(range(n))
    topic_urns: list[list[int]] = [
        [int(p) for p in np.nonzero(topics == t)[0]] for t in range(cfg.n_topics)
    ]
    outlinks: list[list[int]] = [[] for _ in range(n)]

    def settle(v: int) -> None:
        global_urn.append(v)
        topic_urns[int(topics[v])].append(v)

    for i in range(n):
        k_i = int(rng.poisson(cfg.mean_out_degree))
        my_topic = int(topics[i])
        chosen: set[int] = set()
        for _ in range(k_i):
            v = -1
            for _attempt in range(_MAX_REDRAWS):
                if rng.random() < cfg.topic_affinity:
                    urn = topic_urns[my_topic]
                    cand = urn[int(rng.integers(0, len(urn)))]
                else:
                    cand = global_urn[int(rng.integers(0, len(global_urn)))]
                    if int(topics[cand]) == my_topic and cfg.n_topics > 1:
                        continue
                if cand != i and cand not in chosen:
                    v = cand
                    break
            if v < 0:
                continue
            chosen.add(v)
            outlinks[i].append(v)
            settle(v)

    # 5) backbone: guarantee out-degree >= 1 (impossible for a 1-page corpus)
    if n > 1:
        for i in range(n):
            if outlinks[i]:
                continue
            v = i
            while v == i:
                v = int(rng.integers(0, n))
            outlinks[i].append(v)
            settle(v)

    lines = []
    for i in range(n):
        record = {
            "url": _page_url(i),
            "text": texts[i],
            "outlinks": [_page_url(v) for v in outlinks[i]],
        }
        lines.append(json.dumps(record, separators=(",", ":")))
    corpus_text = "\n".join(lines) + "\n" if lines else ""

    class_id = f"topic{cfg.target_topic}"
    targets_obj = {
        class_id: {
            "members": sorted(_page_url(i) for i in target_set),
            "train": sorted(_page_url(i) for i in train_ids),
        }
    }
    targets_text = json.dumps(targets_obj, indent=1, sort_keys=True) + "\n"
    return corpus_text, targets_text


@dataclass
class CorpusStats:
    """Summary of a corpus relative to its target set."""

    n_pages: int
    n_edges: int
    pages_per_depth: dict[int, int]        # depth label histogram vs all targets
    targets_per_depth: dict[int, int]      # forward depth of targets from sampled starts
    start_sample_size: int
    mean_out_degree: float
    max_out_degree: int
    max_in_degree: int
    unreachable_pages: int                 # pages with no path to a target within max_depth
    max_depth: int


def corpus_stats(
    g: WebGraph,
    targets: TargetSet,
    max_depth: int,
    *,
    start_sample: int = 50,
    seed: int = 0,
) -> CorpusStats:
    """Depth and degree summary used to sanity-check generated corpora.

    ``pages_per_depth`` histograms the shortest distance to the nearest
    target over all pages.  ``targets_per_depth`` counts, summed over a
    seeded sample of start pages, how many targets sit at each forward
    BFS depth from the start.
    """
    if not targets.members:
        raise ValueError("target set is empty")
    dist = distance_array(g, targets.members, max_depth)
    values, counts = np.unique(dist[dist >= 0], return_counts=True)
    pages_per_depth = {int(v): int(c) for v, c in zip(values, counts)}

    rng = np.random.default_rng(seed)
    n = len(g)
    sample_size = min(start_sample, n)
    starts = rng.choice(n, size=sample_size, replace=False) if n else np.empty(0, dtype=int)
    member_mask = np.zeros(n, dtype=bool)
    member_mask[list(targets.members)] = True
    targets_per_depth: dict[int, int] = {}
    for s in starts:
        fwd = distance_array(g, [int(s)], max_depth, forward=True)
        hit = np.nonzero((fwd >= 0) & member_mask)[0]
        for d in fwd[hit]:
            targets_per_depth[int(d)] = targets_per_depth.get(int(d), 0) + 1

    out_deg = g.out_degrees()
    in_deg = g.in_degrees()
    return CorpusStats(
        n_pages=n,
        n_edges=g.n_edges,
        pages_per_depth=pages_per_depth,
        targets_per_depth=dict(sorted(targets_per_depth.items())),
        start_sample_size=int(sample_size),
        mean_out_degree=float(out_deg.mean()) if n else 0.0,
        max_out_degree=int(out_deg.max()) if n else 0,
        max_in_degree=int(in_deg.max()) if n else 0,
        unreachable_pages=int((dist < 0).sum()),
        max_depth=max_depth,
    )
