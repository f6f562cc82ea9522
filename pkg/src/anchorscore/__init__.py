"""Anchor-centroid scoring for image embeddings.

Builds high/low quality anchor centroids from labeled embedding pools,
scores query embeddings against them (cosine + softmax), and evaluates
rank agreement with human mean opinion scores.
"""

from .aggregation import (
    AggregationSpec,
    CentroidPair,
    KMeansResult,
    aggregate_kmeans,
    aggregate_mean,
    aggregate_offset,
    build_centroid_pair,
    kmeans,
    load_centroids,
    save_centroids,
)
from .errors import (
    AnchorScoreError,
    ConfigError,
    ConstantInputError,
    DimensionMismatchError,
    EmptySubsetError,
    FormatError,
    MissingMetadataError,
    SweepError,
    ValidationError,
    ZeroNormError,
)
from .evaluation import (
    EvaluationReport,
    RankData,
    evaluate,
    krcc,
    plcc,
    rank_with_ties,
    srcc,
    srcc_closed_form,
)
from .harness import (
    EvalSetOutcome,
    SweepConfig,
    SweepResult,
    emit_results,
    load_results_json,
    load_sweep_config,
    run_sweep,
    sweep_clusters,
    sweep_fraction,
    sweep_offset,
)
from .scoring import (
    ScoreComponents,
    ScoreFailure,
    cosine_similarity,
    score_batch,
    score_embedding,
)
from .store import (
    AnchorSubset,
    EmbeddingDataset,
    EmbeddingRecord,
    SubsetLabel,
    load_dataset,
    save_dataset,
    split_by_median,
    split_by_reference_flag,
    subsample,
)

__version__ = "0.1.0"

__all__ = [
    "AggregationSpec",
    "AnchorScoreError",
    "AnchorSubset",
    "CentroidPair",
    "ConfigError",
    "ConstantInputError",
    "DimensionMismatchError",
    "EmbeddingDataset",
    "EmbeddingRecord",
    "EmptySubsetError",
    "EvalSetOutcome",
    "EvaluationReport",
    "FormatError",
    "KMeansResult",
    "MissingMetadataError",
    "RankData",
    "ScoreComponents",
    "ScoreFailure",
    "SubsetLabel",
    "SweepConfig",
    "SweepError",
    "SweepResult",
    "ValidationError",
    "ZeroNormError",
    "aggregate_kmeans",
    "aggregate_mean",
    "aggregate_offset",
    "build_centroid_pair",
    "cosine_similarity",
    "emit_results",
    "evaluate",
    "kmeans",
    "krcc",
    "load_centroids",
    "load_dataset",
    "load_results_json",
    "load_sweep_config",
    "plcc",
    "rank_with_ties",
    "run_sweep",
    "save_centroids",
    "save_dataset",
    "score_batch",
    "score_embedding",
    "split_by_median",
    "split_by_reference_flag",
    "srcc",
    "srcc_closed_form",
    "subsample",
    "sweep_clusters",
    "sweep_fraction",
    "sweep_offset",
]
