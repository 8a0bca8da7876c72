"""spiderlab: desk-scale focused-crawl simulation and evaluation.

Generate a synthetic web corpus with planted topical locality, train a
linear frontier ranker on a small backlink region around example
targets, run spiders under uninformed / gold / learned strategies, and
compare them with discounted-reward metrics and paired Wilcoxon tests.
"""

from .corpusgen import CorpusStats, GenConfig, corpus_stats, generate
from .evalstat import (
    ComparisonReport,
    EvalConfig,
    StartSample,
    WilcoxonResult,
    actions_to_first_target,
    compare_strategies,
    depth_histogram,
    discounted_cumulative_reward,
    log_dcr_score,
    select_starts,
    targets_found_curve,
    wilcoxon_signed_rank,
)
from .graphstore import (
    ConeResult,
    CorpusFormatError,
    OverlapReport,
    PageRecord,
    TargetSet,
    WebGraph,
    cone_overlap,
    distances_to_targets,
    light_cone,
    load_corpus,
    load_targets,
    trace_region_overlap,
)
from .labeling import (
    TrainingExample,
    build_training_set,
    depth_label,
    discount_label,
    harvest_region,
)
from .ranker import LinearModel, TrainingError, evaluate_model, predict, train
from .spider import (
    BreadthFirst,
    DepthFirst,
    GoldDepth,
    GoldDiscount,
    ModelGuided,
    OracleDetector,
    RandomWalk,
    SimilarityDetector,
    SpiderConfig,
    SpiderTrace,
    Strategy,
    detect_target,
    run_spider,
)
from .textpipe import (
    Dictionary,
    TermVector,
    build_dictionary,
    information_gain,
    information_gain_select,
    tokenize,
    vectorize,
)

__version__ = "0.1.0"
