"""Concept hierarchies mined from concept activation vectors."""

from ._conceptree import (
    Error,
    MissingInputError,
    ValidationError,
    adjacency,
    betweenness,
    edge_cluster_accuracy,
    extract_hierarchy,
    fit_logistic,
    run_cli,
    silhouette,
    symmetric_similarity,
    synth,
)

__all__ = [
    "Error",
    "MissingInputError",
    "ValidationError",
    "adjacency",
    "betweenness",
    "edge_cluster_accuracy",
    "extract_hierarchy",
    "fit_logistic",
    "run_cli",
    "silhouette",
    "symmetric_similarity",
    "synth",
]
