"""Supervised labels harvested around the training targets.

The exploratory phase walks backlinks from the training targets out to a
fixed depth; every page in that region becomes a training example with
two label flavors: its depth (shortest directed distance to the nearest
training target) and its discounted reward (sum over reachable training
targets of discount^distance, the value of collecting each target once
by its shortest route).  Pages that cannot reach a target within the
horizon get a ``None`` depth and a reward of exactly 0.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .graphstore import WebGraph, distance_array, light_cone
from .textpipe import Dictionary, TermVector, tokenize, vectorize


@dataclass
class TrainingExample:
    """(page, unit term vector, depth label or None, discounted-reward label)."""

    page_id: int
    vector: TermVector
    depth: int | None
    discount: float


def harvest_region(g: WebGraph, train_targets: Iterable[int], depth: int) -> set[int]:
    """Pages within the training targets' light cone of the given depth."""
    if depth < 1:
        raise ValueError("harvest depth must be >= 1")
    return set(light_cone(g, train_targets, depth).membership)


def _forward_bfs_targets(
    g: WebGraph, page: int, targets: set[int], horizon: int, *, first_only: bool
) -> dict[int, int]:
    """Distances from ``page`` to each target reachable within ``horizon``,
    via plain forward BFS.  With ``first_only`` stops at the nearest one."""
    if not 0 <= page < len(g):
        raise ValueError(f"page id out of range: {page}")
    found: dict[int, int] = {}
    if page in targets:
        found[page] = 0
        if first_only:
            return found
    seen = {page}
    frontier = deque([page])
    d = 0
    while frontier and d < horizon:
        d += 1
        for _ in range(len(frontier)):
            u = frontier.popleft()
            for v in g.out_neighbors(u).tolist():
                if v in seen:
                    continue
                seen.add(v)
                if v in targets:
                    found[v] = d
                    if first_only:
                        return found
                frontier.append(v)
    return found


def depth_label(g: WebGraph, page: int, targets: Iterable[int], horizon: int) -> int | None:
    """Shortest directed distance from a page to its nearest target, or
    None when no target is reachable within the horizon."""
    target_set = set(int(t) for t in targets)
    found = _forward_bfs_targets(g, page, target_set, horizon, first_only=True)
    return min(found.values()) if found else None


def discount_label(
    g: WebGraph, page: int, targets: Iterable[int], discount: float, horizon: int
) -> float:
    """Sum of discount^distance over targets reachable within the horizon."""
    if not 0 < discount < 1:
        raise ValueError("discount must be in (0, 1)")
    target_set = set(int(t) for t in targets)
    found = _forward_bfs_targets(g, page, target_set, horizon, first_only=False)
    return float(sum(discount**d for d in found.values()))


def depth_labels(g: WebGraph, targets: Iterable[int], horizon: int) -> np.ndarray:
    """Depth labels for every page at once; -1 encodes unreachable."""
    return distance_array(g, targets, horizon)


def discount_labels(
    g: WebGraph, targets: Iterable[int], discount: float, horizon: int
) -> np.ndarray:
    """Discounted-reward labels for every page at once.

    One reverse BFS per target, accumulating discount^distance; agrees
    with :func:`discount_label` page by page.
    """
    if not 0 < discount < 1:
        raise ValueError("discount must be in (0, 1)")
    acc = np.zeros(len(g), dtype=np.float64)
    for t in sorted(set(int(t) for t in targets)):
        dist = distance_array(g, [t], horizon)
        reached = dist >= 0
        acc[reached] += discount ** dist[reached].astype(np.float64)
    return acc


def build_training_set(
    g: WebGraph,
    train_targets: Iterable[int],
    depth: int,
    dictionary: Dictionary,
    discount: float = 0.5,
    horizon: int | None = None,
) -> list[TrainingExample]:
    """Vectorize and label every page in the training region.

    Labels are computed against the training targets only, each page
    scored as if it were the first page visited.  The horizon defaults to
    the harvest depth: labels outside the explored region would not be
    observable.  Examples come back in page-id order.
    """
    targets = sorted(set(int(t) for t in train_targets))
    if horizon is None:
        horizon = depth
    region = harvest_region(g, targets, depth)
    dist = depth_labels(g, targets, horizon)
    disc = discount_labels(g, targets, discount, horizon)
    examples = []
    for page_id in sorted(region):
        vec = vectorize(tokenize(g.page(page_id).text), dictionary)
        d = int(dist[page_id])
        examples.append(
            TrainingExample(
                page_id=page_id,
                vector=vec,
                depth=d if d >= 0 else None,
                discount=float(disc[page_id]),
            )
        )
    return examples


def save_training_set(path: str | Path, examples: Iterable[TrainingExample]) -> None:
    """One line per example: page_id, depth ('inf' when unreachable),
    discount, then comma-separated index:weight pairs."""
    with open(path, "w", encoding="utf-8") as fh:
        for ex in examples:
            depth = "inf" if ex.depth is None else str(ex.depth)
            pairs = ",".join(f"{i}:{w:.17g}" for i, w in ex.vector.pairs())
            fh.write(f"{ex.page_id}\t{depth}\t{ex.discount:.17g}\t{pairs}\n")


def load_training_set(path: str | Path) -> list[TrainingExample]:
    examples = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            parts = line.rstrip("\n").split("\t")
            if len(parts) != 4:
                raise ValueError(f"{path}:{lineno}: expected 4 tab-separated fields")
            page_id = int(parts[0])
            depth = None if parts[1] == "inf" else int(parts[1])
            discount = float(parts[2])
            if parts[3]:
                pairs = []
                for chunk in parts[3].split(","):
                    idx, _, wt = chunk.partition(":")
                    pairs.append((int(idx), float(wt)))
                vec = TermVector.from_pairs(pairs)
            else:
                vec = TermVector.empty()
            examples.append(TrainingExample(page_id, vec, depth, discount))
    return examples
