"""heatalign: score explanation saliency maps against crowd-annotated
heatmaps, rank explainability methods, and compare metric rankings to human
votes with Rank-Biased Overlap."""

__version__ = "0.1.0"

from .boxes import (
    DEFAULT_THRESHOLDS,
    SweepPoint,
    ThresholdSweep,
    iou,
    sweep_thresholds,
    threshold_to_bbox,
)
from .config import DEFAULT_CANVAS, DEFAULT_P_VALUES, ExperimentConfig, load_config
from .heatmaps import (
    AnnotationSet,
    BoundingBox,
    Heatmap,
    aggregate_annotations,
    flatten,
    mass_normalize,
    unit_normalize,
)
from .metrics import (
    ALL_METRICS,
    Metric,
    ScoreTable,
    bray_curtis,
    canberra,
    chebyshev,
    compute,
    compute_score_table,
    correlation_distance,
    cosine_distance,
    euclidean,
    jensen_shannon,
    manhattan,
    min_max_normalize,
    minkowski,
    squared_euclidean,
    wasserstein_1d,
    weighted_jaccard,
)
from .pipeline import (
    EvaluationResult,
    ExperimentState,
    RunManifest,
    emit_report,
    ingest,
    render_overlay,
    run_evaluation,
)
from .ranking import (
    DEFAULT_METHOD_REGISTRY,
    HUMAN_SOURCE,
    Ranking,
    RboReport,
    VoteTally,
    agreement_at_depth,
    best_metric_report,
    human_ranking,
    metric_ranking,
    position_weight,
    rbo_distance,
    rbo_similarity,
)

__all__ = [
    "__version__",
    "ALL_METRICS",
    "AnnotationSet",
    "BoundingBox",
    "DEFAULT_CANVAS",
    "DEFAULT_METHOD_REGISTRY",
    "DEFAULT_P_VALUES",
    "DEFAULT_THRESHOLDS",
    "EvaluationResult",
    "ExperimentConfig",
    "ExperimentState",
    "HUMAN_SOURCE",
    "Heatmap",
    "Metric",
    "Ranking",
    "RboReport",
    "RunManifest",
    "ScoreTable",
    "SweepPoint",
    "ThresholdSweep",
    "VoteTally",
    "aggregate_annotations",
    "agreement_at_depth",
    "best_metric_report",
    "bray_curtis",
    "canberra",
    "chebyshev",
    "compute",
    "compute_score_table",
    "correlation_distance",
    "cosine_distance",
    "emit_report",
    "euclidean",
    "flatten",
    "human_ranking",
    "ingest",
    "iou",
    "jensen_shannon",
    "load_config",
    "manhattan",
    "mass_normalize",
    "metric_ranking",
    "min_max_normalize",
    "minkowski",
    "position_weight",
    "rbo_distance",
    "rbo_similarity",
    "render_overlay",
    "run_evaluation",
    "squared_euclidean",
    "sweep_thresholds",
    "threshold_to_bbox",
    "unit_normalize",
    "wasserstein_1d",
    "weighted_jaccard",
]
