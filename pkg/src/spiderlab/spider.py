"""Fringe-driven page fetch loop and the next-page selection strategies.

A run starts from one page and repeatedly picks the next page to fetch
from the fringe (pages discovered but not yet retrieved, anywhere in the
graph - selection is not restricted to neighbors of the current page).
Uninformed strategies pick uniformly from the whole fringe (random), the
shallowest level (bfs) or the deepest level (dfs).  Greedy strategies
pick the highest-scored entry, breaking ties by a seeded random draw.

Scores come either from the entry's own page (gold lookups into true
depth / discounted-reward tables, or a model applied to the page's own
text - simulation-only, since a real crawler has not seen that text yet)
or are inherited from fetched parents (the default for model-guided
runs): an entry's score is the best prediction among its already-fetched
in-neighbors and only ever rises as more parents are fetched.

A page's discovery depth is fixed the first time it enters the fringe
and is not lowered when a shorter path appears later.  Fetching a test
target the first time is a hit; fetching a *training* target is never a
hit and is recorded as a contamination event instead.
"""

from __future__ import annotations

import heapq
import math
import weakref
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

import numpy as np

from .graphstore import TargetSet, WebGraph, distance_array
from .labeling import discount_labels
from .ranker import LinearModel, predict
from .textpipe import Dictionary, TermVector, tokenize, vectorize

STRATEGY_NAMES = ("random", "bfs", "dfs", "gold-depth", "gold-discount")


@dataclass
class SpiderConfig:
    """One run's knobs.  ``strategy`` is a :class:`Strategy` or one of the
    built-in names; ``discount`` feeds gold discounted-reward scoring."""

    strategy: "Strategy | str"
    budget: int = 20000
    max_depth: int = 40
    seed: int = 0
    discount: float = 0.5

    def validate(self) -> None:
        if self.budget < 1:
            raise ValueError("budget must be >= 1")
        if self.max_depth < 0:
            raise ValueError("max_depth must be >= 0")
        if not 0 < self.discount < 1:
            raise ValueError("discount must be in (0, 1)")


@dataclass
class FringeEntry:
    page_id: int
    depth: int
    score: float
    tie_break: float


class Fringe:
    """Set of discovered-but-unfetched pages with O(log) selection.

    The selection mode is fixed at construction: "random" keeps a flat
    pool, "bfs"/"dfs" keep per-depth buckets plus a lazy heap of depths,
    "greedy" keeps a max-score heap with stale entries skipped on pop
    (scores only ever rise, so old heap items are simply outdated).
    """

    def __init__(self, mode: str) -> None:
        if mode not in ("random", "bfs", "dfs", "greedy"):
            raise ValueError(f"unknown fringe mode: {mode}")
        self.mode = mode
        self.entries: dict[int, FringeEntry] = {}
        self._pool: list[int] = []
        self._pos: dict[int, int] = {}
        self._buckets: dict[int, list[int]] = {}
        self._bpos: dict[int, int] = {}
        self._depth_heap: list[int] = []
        self._heap: list[tuple[float, float, int]] = []

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, page_id: int) -> bool:
        return page_id in self.entries

    def get(self, page_id: int) -> FringeEntry | None:
        return self.entries.get(page_id)

    def insert(self, entry: FringeEntry) -> None:
        pid = entry.page_id
        if pid in self.entries:
            raise ValueError(f"page {pid} already in fringe")
        self.entries[pid] = entry
        if self.mode == "random":
            self._pos[pid] = len(self._pool)
            self._pool.append(pid)
        elif self.mode in ("bfs", "dfs"):
            bucket = self._buckets.get(entry.depth)
            if bucket is None:
                bucket = self._buckets[entry.depth] = []
            if not bucket:
                key = entry.depth if self.mode == "bfs" else -entry.depth
                heapq.heappush(self._depth_heap, key)
            self._bpos[pid] = len(bucket)
            bucket.append(pid)
        else:
            heapq.heappush(self._heap, (-entry.score, entry.tie_break, pid))

    def raise_score(self, page_id: int, score: float) -> None:
        """Monotone score update (greedy mode): lower values are ignored."""
        entry = self.entries[page_id]
        if score > entry.score:
            entry.score = score
            heapq.heappush(self._heap, (-score, entry.tie_break, page_id))

    def _pop_from_pool(self, pool: list[int], pos: dict[int, int], i: int) -> int:
        pid = pool[i]
        last = pool.pop()
        if i < len(pool):
            pool[i] = last
            pos[last] = i
        del pos[pid]
        return pid

    def pop(self, rng: np.random.Generator) -> FringeEntry:
        """Remove and return the next entry per the fringe's mode."""
        if not self.entries:
            raise ValueError("select on an empty fringe")
        if self.mode == "random":
            i = int(rng.integers(len(self._pool)))
            pid = self._pop_from_pool(self._pool, self._pos, i)
        elif self.mode in ("bfs", "dfs"):
            while True:
                key = self._depth_heap[0]
                depth = key if self.mode == "bfs" else -key
                bucket = self._buckets.get(depth)
                if bucket:
                    break
                heapq.heappop(self._depth_heap)
            i = int(rng.integers(len(bucket)))
            pid = self._pop_from_pool(bucket, self._bpos, i)
        else:
            while True:
                neg_score, _, pid = heapq.heappop(self._heap)
                entry = self.entries.get(pid)
                if entry is not None and entry.score == -neg_score:
                    break
        return self.entries.pop(pid)


def select_next(fringe: Fringe, rng: np.random.Generator) -> FringeEntry:
    """Pick (and remove) the next page to fetch.  The fringe must be
    nonempty; its construction mode decides the selection rule."""
    return fringe.pop(rng)


# ---------------------------------------------------------------------------
# scoring
# ---------------------------------------------------------------------------


class Scorer:
    """Page-value source for greedy selection.

    ``kind`` is "page" when an entry is scored from its own page and
    "parent" when the value of *fetched* pages is inherited by their
    unfetched out-neighbors.
    """

    kind = "page"

    def page_value(self, page_id: int) -> float:
        raise NotImplementedError


class _TableScorer(Scorer):
    def __init__(self, table: np.ndarray) -> None:
        self._table = table

    def page_value(self, page_id: int) -> float:
        return float(self._table[page_id])


class _ModelScorer(Scorer):
    """Memoized model prediction on a page's own term vector."""

    def __init__(self, g: WebGraph, model: LinearModel, dictionary: Dictionary, kind: str) -> None:
        self.kind = kind
        self._g = g
        self._model = model
        self._dictionary = dictionary
        self._memo: dict[int, float] = {}

    def page_value(self, page_id: int) -> float:
        value = self._memo.get(page_id)
        if value is None:
            vec = vectorize(tokenize(self._g.page(page_id).text), self._dictionary)
            value = predict(self._model, vec)
            self._memo[page_id] = value
        return value


def score_fringe_entry(
    g: WebGraph, page_id: int, scorer: Scorer, fetched: bytearray
) -> float:
    """Insertion-time score of a prospective fringe page.

    Page-kind scorers read the page itself; parent-kind scorers take the
    maximum value over already-fetched in-neighbors (-inf when no parent
    has been fetched, which cannot happen for pages discovered normally).
    """
    if scorer.kind == "page":
        return scorer.page_value(page_id)
    best = -math.inf
    for u in g.in_neighbors(page_id).tolist():
        if fetched[u]:
            value = scorer.page_value(u)
            if value > best:
                best = value
    return best


# ---------------------------------------------------------------------------
# strategies
# ---------------------------------------------------------------------------


class Strategy:
    """Named selection rule plus an optional scorer factory.

    ``randomized`` marks strategies whose entire behavior is a random
    draw (the uninformed ones); the comparison harness averages those
    over repeated runs while greedy strategies run once per start.
    """

    name: str
    selection: str
    randomized: bool

    def prepare(self, g: WebGraph, targets: TargetSet, cfg: SpiderConfig) -> Scorer | None:
        return None

    def __repr__(self) -> str:  # pragma: no cover
        return f"<{type(self).__name__} {self.name}>"


class RandomWalk(Strategy):
    name = "random"
    selection = "random"
    randomized = True


class BreadthFirst(Strategy):
    name = "bfs"
    selection = "bfs"
    randomized = True


class DepthFirst(Strategy):
    name = "dfs"
    selection = "dfs"
    randomized = True


class _CachingGreedy(Strategy):
    selection = "greedy"
    randomized = False

    def __init__(self) -> None:
        self._cache: "weakref.WeakKeyDictionary[WebGraph, dict]" = weakref.WeakKeyDictionary()

    def _params(self, targets: TargetSet, cfg: SpiderConfig):
        raise NotImplementedError

    def _build(self, g: WebGraph, targets: TargetSet, cfg: SpiderConfig) -> Scorer:
        raise NotImplementedError

    def prepare(self, g: WebGraph, targets: TargetSet, cfg: SpiderConfig) -> Scorer:
        per_graph = self._cache.setdefault(g, {})
        key = self._params(targets, cfg)
        scorer = per_graph.get(key)
        if scorer is None:
            scorer = per_graph[key] = self._build(g, targets, cfg)
        return scorer


class GoldDepth(_CachingGreedy):
    """Oracle: score an entry by minus its true distance to the nearest
    test target (horizon = max_depth; unreachable scores -inf)."""

    name = "gold-depth"

    def _params(self, targets: TargetSet, cfg: SpiderConfig):
        return (targets.test, cfg.max_depth)

    def _build(self, g: WebGraph, targets: TargetSet, cfg: SpiderConfig) -> Scorer:
        dist = distance_array(g, targets.test, cfg.max_depth)
        table = np.where(dist >= 0, -dist.astype(np.float64), -np.inf)
        return _TableScorer(table)


class GoldDiscount(_CachingGreedy):
    """Oracle: score an entry by its true discounted-reward label against
    the test targets (horizon = max_depth)."""

    name = "gold-discount"

    def _params(self, targets: TargetSet, cfg: SpiderConfig):
        return (targets.test, cfg.max_depth, cfg.discount)

    def _build(self, g: WebGraph, targets: TargetSet, cfg: SpiderConfig) -> Scorer:
        table = discount_labels(g, targets.test, cfg.discount, cfg.max_depth)
        return _TableScorer(table)


class ModelGuided(Strategy):
    """Greedy on a trained linear model.

    In the default "parent" mode an unvisited page is scored by the best
    prediction among its fetched parents (a real spider cannot read a
    page it has not retrieved).  The "self" mode scores the page's own
    text and exists only for corpus-oracle experiments; it is labeled as
    such in the strategy name recorded on traces.
    """

    selection = "greedy"
    randomized = False

    def __init__(self, model: LinearModel, dictionary: Dictionary, mode: str = "parent") -> None:
        if mode not in ("parent", "self"):
            raise ValueError("inheritance mode must be 'parent' or 'self'")
        self.model = model
        self.dictionary = dictionary
        self.mode = mode
        self.name = f"model-{model.objective}-{mode}"
        self._scorers: "weakref.WeakKeyDictionary[WebGraph, _ModelScorer]" = (
            weakref.WeakKeyDictionary()
        )

    def prepare(self, g: WebGraph, targets: TargetSet, cfg: SpiderConfig) -> Scorer:
        scorer = self._scorers.get(g)
        if scorer is None:
            kind = "parent" if self.mode == "parent" else "page"
            scorer = self._scorers[g] = _ModelScorer(g, self.model, self.dictionary, kind)
        return scorer


_BUILTIN = {
    "random": RandomWalk,
    "bfs": BreadthFirst,
    "dfs": DepthFirst,
    "gold-depth": GoldDepth,
    "gold-discount": GoldDiscount,
}


def resolve_strategy(spec: "Strategy | str") -> Strategy:
    if isinstance(spec, Strategy):
        return spec
    try:
        return _BUILTIN[spec]()
    except KeyError:
        raise ValueError(
            f"unknown strategy {spec!r}; built-ins are {sorted(_BUILTIN)}"
        ) from None


# ---------------------------------------------------------------------------
# target detection
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OracleDetector:
    """Membership lookup into a known target id set."""

    members: frozenset[int]


@dataclass(frozen=True)
class SimilarityDetector:
    """Cosine similarity of the page against a centroid vector; both sides
    are unit vectors, so the inner product is the cosine."""

    centroid: TermVector
    threshold: float
    dictionary: Dictionary


def centroid_vector(vectors: list[TermVector]) -> TermVector:
    """Unit-normalized mean of unit vectors (for similarity detectors)."""
    acc: dict[int, float] = {}
    for v in vectors:
        for i, w in v.pairs():
            acc[i] = acc.get(i, 0.0) + w
    norm = math.sqrt(sum(w * w for w in acc.values()))
    if norm == 0.0:
        return TermVector.empty()
    return TermVector.from_pairs((i, w / norm) for i, w in acc.items())


def _sparse_dot(a: TermVector, b: TermVector) -> float:
    if len(a) == 0 or len(b) == 0:
        return 0.0
    total = 0.0
    bmap = dict(b.pairs())
    for i, w in a.pairs():
        other = bmap.get(i)
        if other is not None:
            total += w * other
    return total


def detect_target(page, detector) -> bool:
    """Does this page count as a target under the given detector?"""
    if isinstance(detector, OracleDetector):
        return page.id in detector.members
    if isinstance(detector, SimilarityDetector):
        vec = vectorize(tokenize(page.text), detector.dictionary)
        return _sparse_dot(vec, detector.centroid) >= detector.threshold
    raise TypeError(f"not a detector: {detector!r}")


# ---------------------------------------------------------------------------
# traces and the run loop
# ---------------------------------------------------------------------------


@dataclass
class SpiderTrace:
    """Ordered fetch record: arrays indexed by fetch time t = 0..len-1."""

    start_id: int
    strategy: str
    seed: int
    budget: int
    max_depth: int
    pages: np.ndarray
    depths: np.ndarray
    hits: np.ndarray
    contamination: list[int] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.pages)

    @property
    def n_hits(self) -> int:
        return int(self.hits.sum())

    def hit_times(self) -> np.ndarray:
        return np.nonzero(self.hits)[0]

    def events(self) -> Iterator[tuple[int, int, int, bool]]:
        for t in range(len(self.pages)):
            yield t, int(self.pages[t]), int(self.depths[t]), bool(self.hits[t])


def run_spider(
    g: WebGraph,
    start: int,
    targets: TargetSet,
    cfg: SpiderConfig,
    detector: "OracleDetector | SimilarityDetector | None" = None,
) -> SpiderTrace:
    """Run one spider and record its trace.

    The loop fetches the start page at t=0, then alternates: discover the
    fetched page's unvisited out-neighbors into the fringe (depth =
    parent depth + 1, admitted while <= max_depth), select the next fetch
    per the strategy, stop at the budget or an empty fringe.  Hits are
    first fetches of test targets (by the detector, oracle over the test
    split by default); fetched training targets are logged as
    contamination and never count as hits.
    """
    cfg.validate()
    n = len(g)
    if not 0 <= start < n:
        raise ValueError(f"start page {start} not in graph")
    strategy = resolve_strategy(cfg.strategy)
    scorer = strategy.prepare(g, targets, cfg) if strategy.selection == "greedy" else None

    oracle_test = detector is None
    if oracle_test:
        test_mask = bytearray(n)
        for p in targets.test:
            test_mask[p] = 1
    train_mask = bytearray(n)
    for p in targets.train:
        train_mask[p] = 1

    rng = np.random.default_rng(cfg.seed)
    fringe = Fringe(strategy.selection)
    fetched = bytearray(n)
    pages: list[int] = []
    depths: list[int] = []
    hits: list[bool] = []
    contamination: list[int] = []
    parent_mode = scorer is not None and scorer.kind == "parent"

    current, current_depth = start, 0
    t = 0
    while True:
        fetched[current] = 1
        if train_mask[current]:
            hit = False
            contamination.append(t)
        elif oracle_test:
            hit = bool(test_mask[current])
        else:
            hit = detect_target(g.page(current), detector)
        pages.append(current)
        depths.append(current_depth)
        hits.append(hit)
        t += 1
        if t >= cfg.budget:
            break
        child_depth = current_depth + 1
        if child_depth <= cfg.max_depth:
            parent_value = scorer.page_value(current) if parent_mode else 0.0
            for v in g.out_neighbors(current).tolist():
                if fetched[v]:
                    continue
                if v in fringe:
                    if parent_mode:
                        fringe.raise_score(v, parent_value)
                    continue
                if scorer is None:
                    score = 0.0
                elif parent_mode:
                    score = score_fringe_entry(g, v, scorer, fetched)
                else:
                    score = scorer.page_value(v)
                fringe.insert(FringeEntry(v, child_depth, score, float(rng.random())))
        if len(fringe) == 0:
            break
        entry = fringe.pop(rng)
        current, current_depth = entry.page_id, entry.depth

    return SpiderTrace(
        start_id=start,
        strategy=strategy.name,
        seed=cfg.seed,
        budget=cfg.budget,
        max_depth=cfg.max_depth,
        pages=np.array(pages, dtype=np.int64),
        depths=np.array(depths, dtype=np.int32),
        hits=np.array(hits, dtype=bool),
        contamination=contamination,
    )


def save_trace(path: str | Path, trace: SpiderTrace, g: WebGraph) -> None:
    """Header lines (#key<TAB>value) then one ``t<TAB>url<TAB>depth<TAB>hit``
    line per fetch."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"#start\t{g.page(trace.start_id).url}\n")
        fh.write(f"#strategy\t{trace.strategy}\n")
        fh.write(f"#seed\t{trace.seed}\n")
        fh.write(f"#budget\t{trace.budget}\n")
        fh.write(f"#max_depth\t{trace.max_depth}\n")
        if trace.contamination:
            joined = ",".join(str(t) for t in trace.contamination)
            fh.write(f"#contamination\t{joined}\n")
        for t, page, depth, hit in trace.events():
            fh.write(f"{t}\t{g.page(page).url}\t{depth}\t{int(hit)}\n")


def load_trace(path: str | Path, g: WebGraph) -> SpiderTrace:
    header: dict[str, str] = {}
    pages: list[int] = []
    depths: list[int] = []
    hits: list[bool] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line[1:].partition("\t")
                header[key] = value
                continue
            parts = line.split("\t")
            if len(parts) != 4:
                raise ValueError(f"{path}:{lineno}: expected t/url/depth/hit")
            if int(parts[0]) != len(pages):
                raise ValueError(f"{path}:{lineno}: fetch times must be 0..n-1 in order")
            pages.append(g.id_of(parts[1]))
            depths.append(int(parts[2]))
            hits.append(parts[3] == "1")
    try:
        start_id = g.id_of(header["start"])
        strategy = header["strategy"]
        seed = int(header["seed"])
        budget = int(header["budget"])
        max_depth = int(header["max_depth"])
    except KeyError as exc:
        raise ValueError(f"{path}: trace header missing {exc}") from None
    contamination = (
        [int(x) for x in header["contamination"].split(",")]
        if header.get("contamination")
        else []
    )
    return SpiderTrace(
        start_id=start_id,
        strategy=strategy,
        seed=seed,
        budget=budget,
        max_depth=max_depth,
        pages=np.array(pages, dtype=np.int64),
        depths=np.array(depths, dtype=np.int32),
        hits=np.array(hits, dtype=bool),
        contamination=contamination,
    )
