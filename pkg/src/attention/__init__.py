"""Relevance-weighted attention."""

from .kernels import attention, attention_with_weights, causal_mask, weighted_kv
from .weights import (
    AttentionMaps,
    RelevanceWeights,
    entropy_weights,
    gini_mean_difference,
    gini_weights,
    identity_weights,
    max_weights,
    relevance_weights,
)

__all__ = [
    "AttentionMaps",
    "RelevanceWeights",
    "gini_weights",
    "max_weights",
    "entropy_weights",
    "identity_weights",
    "relevance_weights",
    "gini_mean_difference",
    "weighted_kv",
    "attention",
    "attention_with_weights",
    "causal_mask",
]
