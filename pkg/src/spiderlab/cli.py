"""Command-line front end for the experiment lifecycle.

Subcommands: gen, stats, cone, train, run, compare, report.  Settings
resolve in three layers: built-in defaults, then a plain key=value spec
file (``--spec``), then explicit flags, later layers winning.  Every
emitted file either embeds the resolved settings as comment lines or
gets a ``<name>.meta.json`` sidecar, so any output can be re-run
bit-identically.  One base seed drives everything; per-run seeds derive
from (seed, start index, strategy index, repeat index).
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, fields
from pathlib import Path

from . import evalstat, labeling, ranker
from .corpusgen import CorpusStats, GenConfig, corpus_stats, generate
from .evalstat import EvalConfig
from .graphstore import (
    cone_overlap,
    light_cone,
    load_corpus,
    load_targets,
    trace_region_overlap,
)
from .spider import (
    ModelGuided,
    SpiderConfig,
    load_trace,
    resolve_strategy,
    run_spider,
    save_trace,
)
from .textpipe import Dictionary, build_dictionary, information_gain_select, tokenize


@dataclass
class ExperimentSpec:
    """Every knob of the pipeline, with the frozen defaults."""

    # files
    corpus: str = "corpus.jsonl"
    targets: str = "targets.json"
    class_id: str = ""
    dictionary: str = "dictionary.tsv"
    model: str = "model.tsv"
    outdir: str = "report"
    # corpus generation
    n_pages: int = 5000
    n_topics: int = 5
    target_topic: int = 0
    target_fraction: float = 0.04
    mean_out_degree: float = 5.0
    topic_affinity: float = 0.8
    vocab_size: int = 3000
    terms_per_page: int = 120
    train_fraction: float = 0.1
    # text pipeline
    dict_cap: int = 10000
    ig_label_depth: int = 1
    # labeling
    harvest_depth: int = 4
    discount: float = 0.5
    horizon: int = 0          # 0 means "use harvest_depth"
    # ranker
    objective: str = "depth"
    reg: float = 1e-4
    epochs: int = 20
    epsilon: float = 0.1
    # spider
    strategies: str = "gold-depth,gold-discount,random,bfs,dfs"
    budget: int = 20000
    max_depth: int = 40
    inheritance: str = "parent"
    # evaluation
    start_distance: int = 4
    start_count: int = 95
    repeats: int = 20
    jobs: int = 1
    stats_depth: int = 6
    figures: bool = True
    # the one seed
    seed: int = 20210

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def load_spec_file(path: str | Path) -> dict[str, str]:
    """Parse ``key = value`` lines; '#' starts a comment, blanks ignored."""
    entries: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ValueError(f"{path}:{lineno}: expected key = value")
            entries[key.strip()] = value.strip()
    return entries


def _parse_value(name: str, text: str, kind: type):
    if kind is bool:
        lowered = text.lower()
        if lowered in ("true", "1", "yes"):
            return True
        if lowered in ("false", "0", "no"):
            return False
        raise ValueError(f"{name}: expected true/false, got {text!r}")
    return kind(text)


def resolve_spec(args: argparse.Namespace) -> ExperimentSpec:
    """Defaults, overlaid by the spec file, overlaid by explicit flags."""
    spec = ExperimentSpec()
    by_name = {f.name: f for f in fields(ExperimentSpec)}
    if getattr(args, "spec", None):
        for key, value in load_spec_file(args.spec).items():
            if key not in by_name:
                raise ValueError(f"{args.spec}: unknown setting {key!r}")
            setattr(spec, key, _parse_value(key, value, type(getattr(spec, key))))
    for name in by_name:
        value = getattr(args, name, None)
        if value is not None:
            setattr(spec, name, value)
    return spec


def write_sidecar(path: str | Path, command: str, spec: ExperimentSpec) -> Path:
    """Record the full resolved settings next to an output file."""
    side = Path(str(path) + ".meta.json")
    payload = {"command": command, "settings": spec.as_dict()}
    with open(side, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return side


def _add_spec_flags(parser: argparse.ArgumentParser, names: list[str]) -> None:
    by_name = {f.name: f for f in fields(ExperimentSpec)}
    for name in names:
        f = by_name[name]
        flag = "--" + name.replace("_", "-")
        default = getattr(ExperimentSpec(), name)
        kind = type(default)
        if kind is bool:
            group = parser.add_mutually_exclusive_group()
            group.add_argument(flag, dest=name, action="store_true", default=None,
                               help=f"(default {default})")
            group.add_argument("--no-" + name.replace("_", "-"), dest=name,
                               action="store_false", default=None)
        else:
            parser.add_argument(flag, dest=name, type=kind, default=None,
                                help=f"(default {default})")


_FILE_FLAGS = ["corpus", "targets", "class_id"]
_GEN_FLAGS = [
    "n_pages", "n_topics", "target_topic", "target_fraction", "mean_out_degree",
    "topic_affinity", "vocab_size", "terms_per_page", "train_fraction", "seed",
]
_TRAIN_FLAGS = [
    "dict_cap", "ig_label_depth", "harvest_depth", "discount", "horizon",
    "objective", "reg", "epochs", "epsilon", "dictionary", "model", "seed",
]
_RUN_FLAGS = ["budget", "max_depth", "discount", "inheritance", "dictionary", "model", "seed"]
_COMPARE_FLAGS = _RUN_FLAGS + [
    "strategies", "start_distance", "start_count", "repeats", "jobs", "outdir", "figures",
]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spiderlab",
        description="Focused-crawl simulation: generate corpora, train frontier "
        "rankers, run spiders, compare strategies.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic corpus and targets file")
    p.add_argument("--spec", help="key = value settings file")
    _add_spec_flags(p, _FILE_FLAGS[:2] + _GEN_FLAGS)

    p = sub.add_parser("stats", help="depth/degree summary of a corpus")
    p.add_argument("--spec")
    p.add_argument("--out", help="also write the summary as JSON")
    _add_spec_flags(p, _FILE_FLAGS + ["stats_depth"])

    p = sub.add_parser("cone", help="light-cone sizes and train/test overlap")
    p.add_argument("--spec")
    p.add_argument("--depth", type=int, default=None, help="cone depth (default harvest_depth)")
    p.add_argument("--trace", help="trace file for fetched-region overlap")
    p.add_argument("--out", help="also write the report as JSON")
    _add_spec_flags(p, _FILE_FLAGS + ["harvest_depth"])

    p = sub.add_parser("train", help="harvest, label, reduce dictionary, fit the ranker")
    p.add_argument("--spec")
    _add_spec_flags(p, _FILE_FLAGS + _TRAIN_FLAGS[:-1])

    p = sub.add_parser("run", help="run one spider and write its trace")
    p.add_argument("--spec")
    p.add_argument("--strategy", required=True,
                   help="random | bfs | dfs | gold-depth | gold-discount | model")
    p.add_argument("--start", required=True, help="start page url")
    p.add_argument("--out", required=True, help="trace file to write")
    _add_spec_flags(p, _FILE_FLAGS + _RUN_FLAGS[:-1])

    p = sub.add_parser("compare", help="run all strategies from sampled starts and compare")
    p.add_argument("--spec")
    _add_spec_flags(p, _FILE_FLAGS + _COMPARE_FLAGS)

    p = sub.add_parser("report", help="re-render saved report files as text tables and figures")
    p.add_argument("--dir", required=True, help="directory written by compare")
    p.add_argument("--no-figures", dest="figures", action="store_false", default=True)
    return parser


# ---------------------------------------------------------------------------
# subcommand bodies
# ---------------------------------------------------------------------------


def _load_graph_and_targets(spec: ExperimentSpec):
    g = load_corpus(spec.corpus)
    targets = load_targets(spec.targets, g, spec.class_id or None)
    return g, targets


def _cmd_gen(args) -> int:
    spec = resolve_spec(args)
    cfg = GenConfig(
        n_pages=spec.n_pages,
        n_topics=spec.n_topics,
        target_topic=spec.target_topic,
        target_fraction=spec.target_fraction,
        mean_out_degree=spec.mean_out_degree,
        topic_affinity=spec.topic_affinity,
        vocab_size=spec.vocab_size,
        terms_per_page=spec.terms_per_page,
        seed=spec.seed,
        train_fraction=spec.train_fraction,
    )
    corpus_text, targets_text = generate(cfg)
    Path(spec.corpus).write_text(corpus_text, encoding="utf-8")
    Path(spec.targets).write_text(targets_text, encoding="utf-8")
    write_sidecar(spec.corpus, "gen", spec)
    write_sidecar(spec.targets, "gen", spec)
    n_targets = sum(len(v.get("members", [])) for v in json.loads(targets_text).values())
    print(f"wrote {spec.corpus} ({spec.n_pages} pages) and {spec.targets} ({n_targets} targets)")
    return 0


def _stats_as_dict(st: CorpusStats) -> dict:
    return {
        "n_pages": st.n_pages,
        "n_edges": st.n_edges,
        "pages_per_depth": {str(k): v for k, v in sorted(st.pages_per_depth.items())},
        "targets_per_depth": {str(k): v for k, v in sorted(st.targets_per_depth.items())},
        "start_sample_size": st.start_sample_size,
        "mean_out_degree": st.mean_out_degree,
        "max_out_degree": st.max_out_degree,
        "max_in_degree": st.max_in_degree,
        "unreachable_pages": st.unreachable_pages,
        "max_depth": st.max_depth,
    }


def _cmd_stats(args) -> int:
    spec = resolve_spec(args)
    g, targets = _load_graph_and_targets(spec)
    st = corpus_stats(g, targets, spec.stats_depth, seed=spec.seed)
    print(f"pages: {st.n_pages}   edges: {st.n_edges}   "
          f"mean out-degree: {st.mean_out_degree:.2f} (max {st.max_out_degree}, "
          f"max in {st.max_in_degree})")
    print(f"pages by distance-to-target (horizon {st.max_depth}):")
    for depth in sorted(st.pages_per_depth):
        print(f"  {depth:>3}  {st.pages_per_depth[depth]}")
    print(f"beyond horizon: {st.unreachable_pages}")
    print(f"targets by forward depth from {st.start_sample_size} sampled starts:")
    for depth in sorted(st.targets_per_depth):
        print(f"  {depth:>3}  {st.targets_per_depth[depth]}")
    if args.out:
        Path(args.out).write_text(
            json.dumps(_stats_as_dict(st), indent=1, sort_keys=True) + "\n",
            encoding="utf-8",
        )
        write_sidecar(args.out, "stats", spec)
        print(f"wrote {args.out}")
    return 0


def _cmd_cone(args) -> int:
    spec = resolve_spec(args)
    g, targets = _load_graph_and_targets(spec)
    depth = args.depth if args.depth is not None else spec.harvest_depth
    report: dict = {"depth": depth}
    train_cone = light_cone(g, targets.train, depth) if targets.train else None
    test_cone = light_cone(g, targets.test, depth) if targets.test else None
    if train_cone:
        report["train_cone_size"] = len(train_cone)
    if test_cone:
        report["test_cone_size"] = len(test_cone)
    if train_cone and test_cone:
        ov = cone_overlap(train_cone, test_cone)
        report["train_test_overlap"] = {
            "intersection": ov.intersection,
            "fraction_of_train": ov.fraction,
        }
        print(f"train cone: {ov.size_a} pages   test cone: {ov.size_b} pages")
        print(f"overlap: {ov.intersection} pages ({100 * ov.fraction:.2f}% of the train cone)")
    if args.trace:
        if train_cone is None:
            raise ValueError("trace overlap needs a train split in the targets file")
        trace = load_trace(args.trace, g)
        frac = trace_region_overlap(trace, train_cone)
        report["trace_train_overlap_fraction"] = frac
        print(f"trace {args.trace}: {100 * frac:.2f}% of fetches inside the train cone")
    if args.out:
        Path(args.out).write_text(
            json.dumps(report, indent=1, sort_keys=True) + "\n", encoding="utf-8"
        )
        write_sidecar(args.out, "cone", spec)
        print(f"wrote {args.out}")
    return 0


def _cmd_train(args) -> int:
    spec = resolve_spec(args)
    g, targets = _load_graph_and_targets(spec)
    if not targets.train:
        raise ValueError("targets file has no train split; nothing to train on")
    horizon = spec.horizon or spec.harvest_depth
    region = sorted(labeling.harvest_region(g, targets.train, spec.harvest_depth))
    docs = [tokenize(g.page(p).text) for p in region]
    full = build_dictionary(docs)
    dist = labeling.depth_labels(g, targets.train, horizon)
    labels = [bool(0 <= dist[p] <= spec.ig_label_depth) for p in region]
    selected = information_gain_select(full, docs, labels, spec.dict_cap)
    examples = labeling.build_training_set(
        g, targets.train, spec.harvest_depth, selected,
        discount=spec.discount, horizon=horizon,
    )
    model = ranker.train(
        examples, spec.objective, dim=len(selected),
        reg=spec.reg, epochs=spec.epochs, epsilon=spec.epsilon, seed=spec.seed,
    )
    selected.save(spec.dictionary)
    write_sidecar(spec.dictionary, "train", spec)
    ranker.save_model(spec.model, model)
    write_sidecar(spec.model, "train", spec)
    fit = ranker.evaluate_model(model, examples)
    print(f"harvested {len(region)} pages, dictionary {len(full)} -> {len(selected)} terms")
    print(f"trained {spec.objective} model on {fit.n_examples} usable examples: "
          f"train Spearman {fit.spearman:.3f}, mean loss {fit.mean_loss:.4f}")
    print(f"wrote {spec.dictionary} and {spec.model}")
    return 0


def _strategy_from_name(name: str, spec: ExperimentSpec):
    name = name.strip()
    if name == "model":
        model = ranker.load_model(spec.model)
        dictionary = Dictionary.load(spec.dictionary)
        return ModelGuided(model, dictionary, spec.inheritance)
    return resolve_strategy(name)


def _cmd_run(args) -> int:
    spec = resolve_spec(args)
    g, targets = _load_graph_and_targets(spec)
    strategy = _strategy_from_name(args.strategy, spec)
    cfg = SpiderConfig(
        strategy=strategy, budget=spec.budget, max_depth=spec.max_depth,
        seed=spec.seed, discount=spec.discount,
    )
    trace = run_spider(g, g.id_of(args.start), targets, cfg)
    save_trace(args.out, trace, g)
    write_sidecar(args.out, "run", spec)
    print(f"{trace.strategy}: {len(trace)} fetches, {trace.n_hits} targets, "
          f"first at {evalstat.actions_to_first_target(trace, cfg.budget)}; wrote {args.out}")
    return 0


def _cmd_compare(args) -> int:
    spec = resolve_spec(args)
    g, targets = _load_graph_and_targets(spec)
    strategies = [_strategy_from_name(s, spec) for s in spec.strategies.split(",") if s.strip()]
    cfg = EvalConfig(discount=spec.discount, budget=spec.budget)
    starts = evalstat.select_starts(
        g, targets, spec.start_distance, spec.start_count, seed=spec.seed
    )
    if starts.shortfall:
        print(
            f"warning: only {len(starts)} pages at distance {spec.start_distance} "
            f"(asked for {starts.requested})",
            file=sys.stderr,
        )
    report = evalstat.compare_strategies(
        g, targets, list(starts), strategies, cfg,
        max_depth=spec.max_depth, base_seed=spec.seed,
        n_random_repeats=spec.repeats, jobs=spec.jobs,
    )
    written = evalstat.write_report(report, spec.outdir, config=spec.as_dict())
    if spec.figures:
        from . import plotting

        outdir = Path(spec.outdir)
        written.append(plotting.render_curves(report.curves, outdir / "targets_found.png"))
        written.append(
            plotting.render_histograms(report.histograms, outdir / "depth_histogram.png")
        )
    write_sidecar(Path(spec.outdir) / "report.csv", "compare", spec)
    print(f"{len(starts)} starts x {len(strategies)} strategies -> {spec.outdir}/")
    _print_report_table(evalstat.read_report_table(Path(spec.outdir) / "report.csv"))
    return 0


def _print_report_table(rows: list[dict]) -> None:
    headers = ["strategy_a", "strategy_b", "metric", "median_delta", "mean_delta", "p", "n"]
    table = [
        [
            r["strategy_a"], r["strategy_b"], r["metric"],
            f"{r['median_delta']:.4g}", f"{r['mean_delta']:.4g}",
            f"{r['p']:.3g}", str(r["n_effective"]),
        ]
        for r in rows
    ]
    widths = [max(len(h), *(len(row[i]) for row in table)) if table else len(h)
              for i, h in enumerate(headers)]
    print("  ".join(h.ljust(w) for h, w in zip(headers, widths)))
    for row in table:
        print("  ".join(cell.ljust(w) for cell, w in zip(row, widths)))


def _cmd_report(args) -> int:
    outdir = Path(args.dir)
    table_path = outdir / "report.csv"
    if not table_path.exists():
        raise FileNotFoundError(f"{table_path} not found")
    rows = evalstat.read_report_table(table_path)
    _print_report_table(rows)
    curves = {}
    histograms = {}
    for path in sorted(outdir.glob("curve_*.csv")):
        curves[path.stem[len("curve_"):]] = evalstat.read_curve(path)
    for path in sorted(outdir.glob("hist_*.csv")):
        histograms[path.stem[len("hist_"):]] = evalstat.read_histogram(path)
    if curves:
        print("\nfinal median targets found:")
        for name in sorted(curves):
            print(f"  {name:<24} {curves[name][-1]:g}")
    if args.figures and curves:
        from . import plotting

        plotting.render_curves(curves, outdir / "targets_found.png")
        if histograms:
            plotting.render_histograms(histograms, outdir / "depth_histogram.png")
        print(f"figures rendered into {outdir}/")
    return 0


_COMMANDS = {
    "gen": _cmd_gen,
    "stats": _cmd_stats,
    "cone": _cmd_cone,
    "train": _cmd_train,
    "run": _cmd_run,
    "compare": _cmd_compare,
    "report": _cmd_report,
}


def dispatch(argv: list[str]) -> int:
    """Parse and execute one command; returns the exit status."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except BrokenPipeError:
        return 1
    except (OSError, ValueError, KeyError, ranker.TrainingError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
