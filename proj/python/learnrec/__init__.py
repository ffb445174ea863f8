"""Learning-resource recommender: store, recommenders, evaluation."""

from ._core import (
    IoError,
    NotFoundError,
    Recommender,
    ValidationError,
    evaluate,
    f1_at_k,
    map_at_k,
    mrr_at_k,
    ndcg_at_k,
    precision_at_k,
    recall_at_k,
    synthesize,
)

__all__ = [
    "IoError",
    "NotFoundError",
    "Recommender",
    "ValidationError",
    "evaluate",
    "f1_at_k",
    "map_at_k",
    "mrr_at_k",
    "ndcg_at_k",
    "precision_at_k",
    "recall_at_k",
    "synthesize",
]
