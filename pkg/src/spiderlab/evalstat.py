"""Run metrics, the paired Wilcoxon signed-rank test, and the
strategy-comparison harness.

Three measures summarize a trace: total targets found within the budget,
log10 of the discounted cumulative reward (hitless runs take the floor
value budget * log10(discount), as if the first hit came one step past
the budget), and the number of fetches before the first hit (the budget
itself when there is none).  Strategies are compared pairwise: runs are
paired by start page, randomized strategies are first collapsed to their
per-start median over repeated seeded runs, and the per-start differences
feed a two-sided Wilcoxon signed-rank test (exact by sign enumeration up
to 20 effective pairs, normal approximation with tie correction and
continuity correction beyond).
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from ._stats import average_ranks, normal_sf
from .graphstore import TargetSet, WebGraph, distance_array
from .seeding import derive_seed
from .spider import SpiderConfig, SpiderTrace, Strategy, resolve_strategy, run_spider

METRICS = ("targets_found", "log_dcr", "actions_to_first")

_EXACT_LIMIT = 20


@dataclass(frozen=True)
class EvalConfig:
    """Shared evaluation knobs: reward discount, fetch budget, and whether
    hitless runs take the log-score floor (instead of -inf)."""

    discount: float = 0.5
    budget: int = 20000
    log_floor: bool = True

    def validate(self) -> None:
        if not 0 < self.discount < 1:
            raise ValueError("discount must be in (0, 1)")
        if self.budget < 1:
            raise ValueError("budget must be >= 1")


# ---------------------------------------------------------------------------
# per-trace metrics
# ---------------------------------------------------------------------------


def discounted_cumulative_reward(trace: SpiderTrace, discount: float) -> float:
    """Sum of discount^t over hit events; 0 for a hitless trace."""
    times = trace.hit_times()
    if len(times) == 0:
        return 0.0
    return float(np.sum(np.power(discount, times.astype(np.float64))))


def log_dcr_score(trace: SpiderTrace, cfg: EvalConfig) -> float:
    """log10 of the discounted cumulative reward.

    A hitless run has no log; with ``cfg.log_floor`` it scores
    budget * log10(discount) - the score of a hit one step past the
    budget - keeping the metric finite and totally ordered.
    """
    dcr = discounted_cumulative_reward(trace, cfg.discount)
    if dcr > 0.0:
        return math.log10(dcr)
    if cfg.log_floor:
        return cfg.budget * math.log10(cfg.discount)
    return -math.inf


def actions_to_first_target(trace: SpiderTrace, budget: int) -> int:
    """Fetches strictly before the first hit; ``budget`` when hitless."""
    times = trace.hit_times()
    return int(times[0]) if len(times) else budget


def targets_found_curve(trace: SpiderTrace, budget: int) -> np.ndarray:
    """Cumulative hit count at each fetch index 0..budget-1, constant
    after the trace ends."""
    marks = np.zeros(budget, dtype=np.int32)
    times = trace.hit_times()
    marks[times[times < budget]] = 1
    return np.cumsum(marks, dtype=np.int32)


@dataclass
class DepthHistogram:
    """Fetches and hits bucketed by the depth at which they happened."""

    pages: dict[int, int]
    hits: dict[int, int]

    def merge(self, other: "DepthHistogram") -> None:
        for d, c in other.pages.items():
            self.pages[d] = self.pages.get(d, 0) + c
        for d, c in other.hits.items():
            self.hits[d] = self.hits.get(d, 0) + c


def depth_histogram(trace: SpiderTrace) -> DepthHistogram:
    depths, counts = np.unique(trace.depths, return_counts=True)
    pages = {int(d): int(c) for d, c in zip(depths, counts)}
    hit_depths, hit_counts = np.unique(trace.depths[trace.hits], return_counts=True)
    hits = {int(d): int(c) for d, c in zip(hit_depths, hit_counts)}
    return DepthHistogram(pages, hits)


# ---------------------------------------------------------------------------
# Wilcoxon signed-rank test
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WilcoxonResult:
    n_effective: int
    w_plus: float
    p_two_sided: float
    median_diff: float
    mean_diff: float
    method: str  # "exact" | "normal-approximation"


def _exact_two_sided(ranks: np.ndarray, w_plus: float) -> float:
    """Exact two-sided p over all sign assignments.

    Average ranks are half-integers, so doubling makes them integers and
    the distribution of 2*W+ follows by convolution over the ranks.
    """
    doubled = np.rint(2 * ranks).astype(np.int64)
    total = int(doubled.sum())
    counts = np.zeros(total + 1, dtype=np.float64)
    counts[0] = 1.0
    upto = 0
    for r in doubled:
        upto += int(r)
        shifted = np.zeros_like(counts)
        shifted[r : upto + 1] = counts[: upto + 1 - r]
        counts[: upto + 1] += shifted[: upto + 1]
    counts /= 2.0 ** len(ranks)
    w2 = int(round(2 * w_plus))
    p_ge = float(counts[w2:].sum())
    p_le = float(counts[: w2 + 1].sum())
    return min(1.0, 2.0 * min(p_ge, p_le))


def _approx_two_sided(ranks: np.ndarray, w_plus: float) -> float:
    """Normal approximation with tie-corrected variance and continuity
    correction."""
    n = len(ranks)
    mean = n * (n + 1) / 4.0
    _, tie_counts = np.unique(ranks, return_counts=True)
    tie_term = float(np.sum(tie_counts.astype(np.float64) ** 3 - tie_counts)) / 48.0
    var = n * (n + 1) * (2 * n + 1) / 24.0 - tie_term
    centered = w_plus - mean
    if centered > 0:
        centered -= 0.5
    elif centered < 0:
        centered += 0.5
    z = centered / math.sqrt(var)
    return min(1.0, 2.0 * normal_sf(abs(z)))


def wilcoxon_signed_rank(diffs: Sequence[float]) -> WilcoxonResult:
    """Two-sided Wilcoxon signed-rank test on paired differences.

    Zero differences are discarded before ranking; absolute values get
    average ranks on ties; W+ is the rank sum of the positive side.  With
    no effective pairs the p-value is 1.  The reported median/mean are of
    the differences as given, zeros included.
    """
    arr = np.asarray(list(diffs), dtype=np.float64)
    if len(arr) == 0:
        raise ValueError("need at least one difference")
    nonzero = arr[arr != 0.0]
    n = len(nonzero)
    median_diff = float(np.median(arr))
    mean_diff = float(np.mean(arr))
    if n == 0:
        return WilcoxonResult(0, 0.0, 1.0, median_diff, mean_diff, "exact")
    ranks = average_ranks(np.abs(nonzero))
    w_plus = float(ranks[nonzero > 0].sum())
    if n <= _EXACT_LIMIT:
        p = _exact_two_sided(ranks, w_plus)
        method = "exact"
    else:
        p = _approx_two_sided(ranks, w_plus)
        method = "normal-approximation"
    return WilcoxonResult(n, w_plus, p, median_diff, mean_diff, method)


# ---------------------------------------------------------------------------
# start sampling
# ---------------------------------------------------------------------------


@dataclass
class StartSample:
    """Seeded sample of start pages at an exact distance from the nearest
    test target.  ``shortfall`` flags that fewer pages existed than asked."""

    pages: list[int]
    requested: int
    distance: int
    shortfall: bool

    def __len__(self) -> int:
        return len(self.pages)

    def __iter__(self):
        return iter(self.pages)


def select_starts(
    g: WebGraph,
    targets: TargetSet,
    start_distance: int,
    count: int,
    seed: int,
) -> StartSample:
    """Sample pages whose depth against the test targets is exactly
    ``start_distance``, uniformly without replacement."""
    if count < 1:
        raise ValueError("count must be >= 1")
    if start_distance < 0:
        raise ValueError("start_distance must be >= 0")
    dist = distance_array(g, targets.test, start_distance)
    eligible = np.nonzero(dist == start_distance)[0]
    if len(eligible) == 0:
        raise ValueError(f"no page at distance {start_distance} from the test targets")
    rng = np.random.default_rng(seed)
    take = min(count, len(eligible))
    picked = rng.choice(eligible, size=take, replace=False)
    return StartSample(
        pages=[int(p) for p in picked],
        requested=count,
        distance=start_distance,
        shortfall=take < count,
    )


# ---------------------------------------------------------------------------
# strategy comparison
# ---------------------------------------------------------------------------


@dataclass
class PairComparison:
    strategy_a: str
    strategy_b: str
    metric: str
    median_delta: float
    mean_delta: float
    wilcoxon: WilcoxonResult


@dataclass
class ComparisonReport:
    strategies: list[str]
    n_starts: int
    n_random_repeats: int
    eval_config: EvalConfig
    pairs: list[PairComparison]
    curves: dict[str, np.ndarray]            # per-strategy pointwise median
    histograms: dict[str, DepthHistogram]    # per-strategy, summed over runs
    start_values: dict[str, dict[str, list[float]]] = field(default_factory=dict)

    def pair(self, a: str, b: str, metric: str) -> PairComparison:
        for p in self.pairs:
            if p.strategy_a == a and p.strategy_b == b and p.metric == metric:
                return p
        raise KeyError(f"no comparison for ({a}, {b}, {metric})")


@dataclass
class _RunSummary:
    metrics: tuple[float, float, float]
    curve: np.ndarray
    histogram: DepthHistogram


def _summarize_run(
    g: WebGraph,
    start: int,
    targets: TargetSet,
    strategy: Strategy,
    cfg: EvalConfig,
    max_depth: int,
    seed: int,
) -> _RunSummary:
    spider_cfg = SpiderConfig(
        strategy=strategy,
        budget=cfg.budget,
        max_depth=max_depth,
        seed=seed,
        discount=cfg.discount,
    )
    trace = run_spider(g, start, targets, spider_cfg)
    metrics = (
        float(trace.n_hits),
        log_dcr_score(trace, cfg),
        float(actions_to_first_target(trace, cfg.budget)),
    )
    return _RunSummary(metrics, targets_found_curve(trace, cfg.budget), depth_histogram(trace))


_POOL_STATE: dict = {}


def _pool_init(g, targets, strategies, cfg, max_depth, base_seed):
    _POOL_STATE.update(
        g=g, targets=targets, strategies=strategies, cfg=cfg,
        max_depth=max_depth, base_seed=base_seed,
    )


def _pool_task(coords: tuple[int, int, int, int]) -> tuple[tuple[int, int, int], _RunSummary]:
    start_idx, start, strat_idx, repeat = coords
    s = _POOL_STATE
    seed = derive_seed(s["base_seed"], start_idx, strat_idx, repeat)
    summary = _summarize_run(
        s["g"], start, s["targets"], s["strategies"][strat_idx],
        s["cfg"], s["max_depth"], seed,
    )
    return (start_idx, strat_idx, repeat), summary


def compare_strategies(
    g: WebGraph,
    targets: TargetSet,
    starts: Sequence[int],
    strategies: Sequence[Strategy | str],
    cfg: EvalConfig,
    *,
    max_depth: int = 40,
    base_seed: int = 0,
    n_random_repeats: int = 20,
    jobs: int = 1,
) -> ComparisonReport:
    """Run every strategy from every start and compare all ordered pairs.

    Randomized strategies (random/bfs/dfs) run ``n_random_repeats`` times
    per start and are collapsed to their per-start median metric before
    pairing; greedy strategies run once per start.  Per-run seeds derive
    from (base_seed, start index, strategy index, repeat index), so
    results are independent of scheduling; ``jobs > 1`` fans starts out
    over worker processes and assembles results in index order.
    """
    cfg.validate()
    starts = [int(s) for s in starts]
    if not starts:
        raise ValueError("need at least one start page")
    resolved = [resolve_strategy(s) for s in strategies]
    names = [s.name for s in resolved]
    if len(resolved) < 2:
        raise ValueError("need at least two strategies to compare")
    if len(set(names)) != len(names):
        raise ValueError(f"duplicate strategy names: {names}")

    work: list[tuple[int, int, int, int]] = []
    for start_idx, start in enumerate(starts):
        for strat_idx, strategy in enumerate(resolved):
            repeats = n_random_repeats if strategy.randomized else 1
            for repeat in range(repeats):
                work.append((start_idx, start, strat_idx, repeat))

    summaries: dict[tuple[int, int, int], _RunSummary] = {}
    if jobs > 1:
        # prepare scorer tables once in the parent so workers inherit them
        probe_cfg = SpiderConfig(strategy=resolved[0], budget=cfg.budget,
                                 max_depth=max_depth, discount=cfg.discount)
        for s in resolved:
            if s.selection == "greedy":
                s.prepare(g, targets, probe_cfg)
        import multiprocessing

        ctx = multiprocessing.get_context("fork")
        with ProcessPoolExecutor(
            max_workers=jobs,
            mp_context=ctx,
            initializer=_pool_init,
            initargs=(g, targets, resolved, cfg, max_depth, base_seed),
        ) as pool:
            for key, summary in pool.map(_pool_task, work, chunksize=8):
                summaries[key] = summary
    else:
        for start_idx, start, strat_idx, repeat in work:
            seed = derive_seed(base_seed, start_idx, strat_idx, repeat)
            summaries[(start_idx, strat_idx, repeat)] = _summarize_run(
                g, start, targets, resolved[strat_idx], cfg, max_depth, seed
            )

    # collapse repeats to per-start medians, gather curves and histograms
    per_start: dict[str, dict[str, list[float]]] = {
        name: {m: [] for m in METRICS} for name in names
    }
    curves: dict[str, np.ndarray] = {}
    histograms: dict[str, DepthHistogram] = {}
    for strat_idx, strategy in enumerate(resolved):
        name = strategy.name
        repeats = n_random_repeats if strategy.randomized else 1
        all_curves = []
        hist = DepthHistogram({}, {})
        for start_idx in range(len(starts)):
            values = {m: [] for m in METRICS}
            for repeat in range(repeats):
                summary = summaries[(start_idx, strat_idx, repeat)]
                for m, v in zip(METRICS, summary.metrics):
                    values[m].append(v)
                all_curves.append(summary.curve)
                hist.merge(summary.histogram)
            for m in METRICS:
                per_start[name][m].append(float(np.median(values[m])))
        curves[name] = np.median(np.stack(all_curves), axis=0)
        histograms[name] = hist

    pairs: list[PairComparison] = []
    for i in range(len(resolved)):
        for j in range(i + 1, len(resolved)):
            a, b = names[i], names[j]
            for m in METRICS:
                diffs = [
                    va - vb
                    for va, vb in zip(per_start[a][m], per_start[b][m])
                ]
                result = wilcoxon_signed_rank(diffs)
                pairs.append(
                    PairComparison(
                        strategy_a=a,
                        strategy_b=b,
                        metric=m,
                        median_delta=result.median_diff,
                        mean_delta=result.mean_diff,
                        wilcoxon=result,
                    )
                )
    return ComparisonReport(
        strategies=names,
        n_starts=len(starts),
        n_random_repeats=n_random_repeats,
        eval_config=cfg,
        pairs=pairs,
        curves=curves,
        histograms=histograms,
        start_values=per_start,
    )

# ---------------------------------------------------------------------------
# report files
# ---------------------------------------------------------------------------


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def _config_lines(config: dict | None) -> list[str]:
    if not config:
        return []
    return [f"# {key}={config[key]}" for key in sorted(config)]


def write_report(
    report: ComparisonReport, outdir: str | Path, config: dict | None = None
) -> list[Path]:
    """Write the comparison as comma-separated files under ``outdir``.

    ``report.csv`` holds one row per (strategy pair, metric); each
    strategy also gets a median-curve file ``curve_<name>.csv`` and a
    depth-histogram file ``hist_<name>.csv``.  ``config`` key/values are
    recorded as leading ``#`` comment lines in every file so a report can
    be traced back to the exact resolved experiment settings.
    """
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    header = _config_lines(config)
    written: list[Path] = []

    path = outdir / "report.csv"
    with open(path, "w", encoding="utf-8") as fh:
        for line in header:
            fh.write(line + "\n")
        fh.write("strategy_a,strategy_b,metric,median_delta,mean_delta,p,n_effective\n")
        for pair in report.pairs:
            fh.write(
                f"{pair.strategy_a},{pair.strategy_b},{pair.metric},"
                f"{_fmt(pair.median_delta)},{_fmt(pair.mean_delta)},"
                f"{_fmt(pair.wilcoxon.p_two_sided)},{pair.wilcoxon.n_effective}\n"
            )
    written.append(path)

    for name in report.strategies:
        path = outdir / f"curve_{name}.csv"
        with open(path, "w", encoding="utf-8") as fh:
            for line in header:
                fh.write(line + "\n")
            fh.write("t,median_targets\n")
            for t, value in enumerate(report.curves[name]):
                fh.write(f"{t},{_fmt(float(value))}\n")
        written.append(path)

    for name in report.strategies:
        hist = report.histograms[name]
        path = outdir / f"hist_{name}.csv"
        with open(path, "w", encoding="utf-8") as fh:
            for line in header:
                fh.write(line + "\n")
            fh.write("depth,pages,hits\n")
            for depth in sorted(hist.pages):
                fh.write(f"{depth},{hist.pages[depth]},{hist.hits.get(depth, 0)}\n")
        written.append(path)
    return written


def _read_csv(path: str | Path) -> tuple[list[str], list[list[str]]]:
    rows: list[list[str]] = []
    header: list[str] | None = None
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            if header is None:
                header = line.split(",")
            else:
                rows.append(line.split(","))
    if header is None:
        raise ValueError(f"{path}: no header row")
    return header, rows


def read_report_table(path: str | Path) -> list[dict]:
    """Rows of report.csv as dicts with numeric fields parsed."""
    header, rows = _read_csv(path)
    expected = ["strategy_a", "strategy_b", "metric", "median_delta", "mean_delta", "p", "n_effective"]
    if header != expected:
        raise ValueError(f"{path}: unexpected columns {header}")
    out = []
    for row in rows:
        out.append(
            {
                "strategy_a": row[0],
                "strategy_b": row[1],
                "metric": row[2],
                "median_delta": float(row[3]),
                "mean_delta": float(row[4]),
                "p": float(row[5]),
                "n_effective": int(row[6]),
            }
        )
    return out


def read_curve(path: str | Path) -> np.ndarray:
    header, rows = _read_csv(path)
    if header != ["t", "median_targets"]:
        raise ValueError(f"{path}: unexpected columns {header}")
    return np.array([float(r[1]) for r in rows])


def read_histogram(path: str | Path) -> DepthHistogram:
    header, rows = _read_csv(path)
    if header != ["depth", "pages", "hits"]:
        raise ValueError(f"{path}: unexpected columns {header}")
    pages = {int(r[0]): int(r[1]) for r in rows}
    hits = {int(r[0]): int(r[2]) for r in rows if int(r[2])}
    return DepthHistogram(pages, hits)
