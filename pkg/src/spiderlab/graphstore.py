"""Immutable web graph with distance and light-cone analytics.

A corpus is a line-delimited JSON file, one page per line with fields
``url``, ``text`` and ``outlinks`` (an array of url strings).  Loading
assigns dense page ids in file order, resolves outlinks to ids, drops
links whose endpoint is not in the corpus (counting them) and collapses
duplicate outlinks.  The resulting :class:`WebGraph` is immutable and
safe to share across concurrent experiment runs.

A companion targets file is a JSON object mapping a class id to the
class's target urls: either a plain array, or an object with ``members``
and an optional ``train`` array naming the training split.

Distances here always follow link direction *toward* targets: the depth
of a page is the length of the shortest directed path from the page to
its nearest target, found by breadth-first search over reverse adjacency.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


class CorpusFormatError(ValueError):
    """Raised when a corpus or targets file violates the format."""


@dataclass
class PageRecord:
    """One page: dense id, unique url, body text, resolved outlink ids."""

    id: int
    url: str
    text: str
    outlinks: list[int]


class WebGraph:
    """Directed page graph over compressed adjacency arrays.

    Forward and reverse adjacency are stored CSR-style (``out_ptr`` /
    ``out_idx`` and ``in_ptr`` / ``in_idx``) so that traversals can run
    as vectorized frontier sweeps.  Construction is the only mutation;
    afterwards the arrays are marked read-only.
    """

    def __init__(self, pages: list[PageRecord], dropped_links: int) -> None:
        self.pages = pages
        self.dropped_links = dropped_links
        self._url_index = {p.url: p.id for p in pages}
        n = len(pages)
        out_deg = np.fromiter((len(p.outlinks) for p in pages), dtype=np.int64, count=n)
        n_edges = int(out_deg.sum())
        self.out_ptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(out_deg, out=self.out_ptr[1:])
        self.out_idx = np.fromiter(
            (v for p in pages for v in p.outlinks), dtype=np.int32, count=n_edges
        )
        # transpose: stable sort by destination keeps sources in source order
        src = np.repeat(np.arange(n, dtype=np.int32), out_deg)
        self.in_idx = src[np.argsort(self.out_idx, kind="stable")]
        in_deg = np.bincount(self.out_idx, minlength=n)
        self.in_ptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(in_deg, out=self.in_ptr[1:])
        for arr in (self.out_ptr, self.out_idx, self.in_ptr, self.in_idx):
            arr.setflags(write=False)

    def __len__(self) -> int:
        return len(self.pages)

    @property
    def n_edges(self) -> int:
        return int(self.out_ptr[-1])

    def page(self, page_id: int) -> PageRecord:
        return self.pages[page_id]

    def id_of(self, url: str) -> int:
        try:
            return self._url_index[url]
        except KeyError:
            raise KeyError(f"url not in corpus: {url}") from None

    def has_url(self, url: str) -> bool:
        return url in self._url_index

    def out_neighbors(self, page_id: int) -> np.ndarray:
        return self.out_idx[self.out_ptr[page_id] : self.out_ptr[page_id + 1]]

    def in_neighbors(self, page_id: int) -> np.ndarray:
        return self.in_idx[self.in_ptr[page_id] : self.in_ptr[page_id + 1]]

    def out_degrees(self) -> np.ndarray:
        return np.diff(self.out_ptr)

    def in_degrees(self) -> np.ndarray:
        return np.diff(self.in_ptr)


def _build_graph(records: list[tuple[str, str, list[str]]]) -> WebGraph:
    url_to_id: dict[str, int] = {}
    for i, (url, _, _) in enumerate(records):
        if url in url_to_id:
            raise CorpusFormatError(f"duplicate url: {url}")
        url_to_id[url] = i
    pages: list[PageRecord] = []
    dropped = 0
    for i, (url, text, outlinks) in enumerate(records):
        resolved: list[int] = []
        seen: set[int] = set()
        for link in outlinks:
            j = url_to_id.get(link)
            if j is None:
                dropped += 1
                continue
            if j not in seen:
                seen.add(j)
                resolved.append(j)
        pages.append(PageRecord(i, url, text, resolved))
    return WebGraph(pages, dropped)


def load_corpus(path: str | Path) -> WebGraph:
    """Load a line-delimited JSON corpus into a :class:`WebGraph`.

    Page ids follow file order.  Raises :class:`CorpusFormatError` naming
    the offending line for malformed records or duplicate urls.  Blank
    lines are skipped; an empty file yields an empty graph.
    """
    records: list[tuple[str, str, list[str]]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from None
            if not isinstance(obj, dict):
                raise CorpusFormatError(f"{path}:{lineno}: record must be a JSON object")
            try:
                url = obj["url"]
                text = obj["text"]
                outlinks = obj["outlinks"]
            except KeyError as exc:
                raise CorpusFormatError(f"{path}:{lineno}: missing field {exc}") from None
            if (
                not isinstance(url, str)
                or not isinstance(text, str)
                or not isinstance(outlinks, list)
                or not all(isinstance(x, str) for x in outlinks)
            ):
                raise CorpusFormatError(f"{path}:{lineno}: bad field types")
            records.append((url, text, outlinks))
    try:
        return _build_graph(records)
    except CorpusFormatError as exc:
        raise CorpusFormatError(f"{path}: {exc}") from None


@dataclass(frozen=True)
class TargetSet:
    """A target class with its train/test split.

    ``train`` and ``test`` partition ``members``: disjoint, union equal.
    """

    class_id: str
    members: frozenset[int]
    train: frozenset[int]
    test: frozenset[int] = field(default=frozenset())

    def __post_init__(self) -> None:
        if self.train | self.test != self.members or self.train & self.test:
            raise ValueError("train/test must partition members")

    @staticmethod
    def from_split(class_id: str, train: Iterable[int], test: Iterable[int]) -> "TargetSet":
        train_set = frozenset(train)
        test_set = frozenset(test)
        return TargetSet(class_id, train_set | test_set, train_set, test_set)


def load_targets(path: str | Path, graph: WebGraph, class_id: str | None = None) -> TargetSet:
    """Load one target class from a targets file and resolve urls to ids.

    With several classes in the file, ``class_id`` selects one; with a
    single class it may be omitted.  Urls not present in the corpus are
    an error.
    """
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise CorpusFormatError(f"{path}: invalid JSON ({exc.msg})") from None
    if not isinstance(data, dict) or not data:
        raise CorpusFormatError(f"{path}: targets file must be a non-empty JSON object")
    if class_id is None:
        if len(data) > 1:
            raise CorpusFormatError(
                f"{path}: several target classes {sorted(data)}; pass class_id"
            )
        class_id = next(iter(data))
    if class_id not in data:
        raise CorpusFormatError(f"{path}: no target class named {class_id!r}")
    entry = data[class_id]
    if isinstance(entry, list):
        member_urls, train_urls = entry, []
    elif isinstance(entry, dict):
        member_urls = entry.get("members", [])
        train_urls = entry.get("train", [])
    else:
        raise CorpusFormatError(f"{path}: class {class_id!r} must be an array or object")

    def resolve(urls: Sequence[str], what: str) -> frozenset[int]:
        ids = set()
        for u in urls:
            if not graph.has_url(u):
                raise CorpusFormatError(f"{path}: {what} url not in corpus: {u}")
            ids.add(graph.id_of(u))
        return frozenset(ids)

    members = resolve(member_urls, "target")
    train = resolve(train_urls, "train")
    if not train <= members:
        raise CorpusFormatError(f"{path}: train urls must be members of class {class_id!r}")
    return TargetSet(class_id, members, train, members - train)


def save_targets(path: str | Path, graph: WebGraph, targets: TargetSet) -> None:
    urls = {
        targets.class_id: {
            "members": sorted(graph.page(i).url for i in targets.members),
            "train": sorted(graph.page(i).url for i in targets.train),
        }
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(urls, fh, indent=1, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# traversal
# ---------------------------------------------------------------------------


def _gather(ptr: np.ndarray, idx: np.ndarray, frontier: np.ndarray) -> np.ndarray:
    """All neighbors of the frontier nodes, concatenated (with repeats)."""
    counts = (ptr[frontier + 1] - ptr[frontier]).astype(np.int64)
    total = int(counts.sum())
    if total == 0:
        return np.empty(0, dtype=idx.dtype)
    starts = ptr[frontier]
    offsets = np.arange(total, dtype=np.int64) - np.repeat(
        np.cumsum(counts) - counts, counts
    )
    return idx[np.repeat(starts, counts) + offsets]


def distance_array(
    g: WebGraph, targets: Iterable[int], max_depth: int, *, forward: bool = False
) -> np.ndarray:
    """Shortest directed distance from every page to the nearest target,
    as an int array with -1 for pages farther than ``max_depth``.

    By default distances follow links toward the targets (BFS over the
    reverse adjacency from the target set).  ``forward=True`` instead
    measures distance *from* the source set along forward links.
    """
    seeds = np.array(sorted(set(int(t) for t in targets)), dtype=np.int64)
    n = len(g)
    if seeds.size and (seeds.min() < 0 or seeds.max() >= n):
        raise ValueError("target id out of range")
    if max_depth < 0:
        raise ValueError("max_depth must be >= 0")
    ptr, idx = (g.out_ptr, g.out_idx) if forward else (g.in_ptr, g.in_idx)
    dist = np.full(n, -1, dtype=np.int32)
    if seeds.size == 0:
        return dist
    dist[seeds] = 0
    frontier = seeds
    for d in range(1, max_depth + 1):
        if frontier.size == 0:
            break
        nbrs = _gather(ptr, idx, frontier)
        if nbrs.size == 0:
            break
        fresh = np.unique(nbrs[dist[nbrs] < 0])
        dist[fresh] = d
        frontier = fresh
    return dist


def distances_to_targets(
    g: WebGraph, targets: Iterable[int], max_depth: int
) -> dict[int, int]:
    """Map each page within ``max_depth`` of the target set to its depth.

    Depth is the minimum length of a directed path from the page to any
    target.  Pages beyond the horizon are absent from the result.
    """
    dist = distance_array(g, targets, max_depth)
    reached = np.nonzero(dist >= 0)[0]
    return {int(p): int(dist[p]) for p in reached}


@dataclass(frozen=True)
class ConeResult:
    """Light cone: pages within a directed distance of the apex set,
    each mapped to its exact distance (0 for the apexes themselves)."""

    depth: int
    membership: dict[int, int]

    def __len__(self) -> int:
        return len(self.membership)

    def member_ids(self) -> frozenset[int]:
        return frozenset(self.membership)


def light_cone(g: WebGraph, apexes: Iterable[int], depth: int) -> ConeResult:
    """Pages with a directed path of length <= depth to an apex."""
    apex_set = set(int(a) for a in apexes)
    if not apex_set:
        raise ValueError("apex set must be nonempty")
    return ConeResult(depth, distances_to_targets(g, apex_set, depth))


@dataclass(frozen=True)
class OverlapReport:
    intersection: int
    size_a: int
    size_b: int

    @property
    def fraction(self) -> float:
        """|A ∩ B| / |A|, defined as 0 when A is empty."""
        return self.intersection / self.size_a if self.size_a else 0.0


def cone_overlap(a: ConeResult, b: ConeResult) -> OverlapReport:
    """Set intersection statistics between two cone memberships."""
    ids_a = a.member_ids()
    ids_b = b.member_ids()
    return OverlapReport(len(ids_a & ids_b), len(ids_a), len(ids_b))


def trace_region_overlap(trace, cone: ConeResult) -> float:
    """Fraction of a trace's fetched pages that lie inside the cone.

    ``trace`` is any object exposing a ``pages`` array of fetched page
    ids (a :class:`spiderlab.spider.SpiderTrace`).
    """
    fetched = set(int(p) for p in trace.pages)
    if not fetched:
        raise ValueError("trace has no fetches")
    members = cone.member_ids()
    return len(fetched & members) / len(fetched)
