"""Relevance weights from first-layer cross-attention rows.

Each prompt token's cross-attention row is a distribution over audio frames.
A concentrated row (the token is heard at a specific place) scores high; a
flat row (the token has no acoustic anchor) scores low.
"""

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..core.constants import normalize_strategy
from ..core.errors import AttentionError

ROW_SUM_TOLERANCE = 1e-6


@dataclass(frozen=True, eq=False)
class AttentionMaps:
    """Captured cross-attention, T_text x N, taken from the first decoder layer."""

    ca: np.ndarray
    layer_index: int = 0

    def __post_init__(self):
        if self.layer_index != 0:
            raise AttentionError(f"Relevance weights use the first cross-attention layer, got layer {self.layer_index}")
        ca = np.asarray(self.ca, dtype=np.float64)
        if ca.ndim != 2:
            raise AttentionError(f"Cross-attention must be 2-D, got shape {ca.shape}")
        if ca.shape[0]:
            _check_distributions(ca)
        object.__setattr__(self, "ca", ca)

    @property
    def n_rows(self) -> int:
        return self.ca.shape[0]

    @property
    def n_frames(self) -> int:
        return self.ca.shape[1]


@dataclass(frozen=True, eq=False)
class RelevanceWeights:
    """One weight per prompt token (the diagonal of G)."""

    g: np.ndarray
    strategy: str

    def __len__(self) -> int:
        return len(self.g)

    @property
    def is_identity(self) -> bool:
        return self.strategy == "none"


def _as_rows(ca_rows) -> np.ndarray:
    rows = np.asarray(ca_rows, dtype=np.float64)
    if rows.ndim == 1:
        rows = rows[None, :]
    if rows.ndim != 2 or rows.shape[1] < 1:
        raise AttentionError(f"Expected a T_p x N matrix, got shape {rows.shape}")
    if np.isnan(rows).any():
        raise AttentionError("Cross-attention rows contain NaN")
    if (rows < 0).any():
        raise AttentionError("Cross-attention rows must be non-negative")
    return rows


def _check_distributions(rows: np.ndarray) -> None:
    if (rows < 0).any():
        raise AttentionError("Cross-attention rows must be non-negative")
    sums = rows.sum(axis=1)
    bad = np.flatnonzero(np.abs(sums - 1.0) > ROW_SUM_TOLERANCE)
    if bad.size:
        raise AttentionError(f"Row {bad[0]} sums to {sums[bad[0]]:.9f}, not 1")


def gini_weights(ca_rows) -> RelevanceWeights:
    """Gini coefficient of each row over its N frames.

    g_i = sum_k (2k - N - 1) * x_(k) / (N * sum_k x_(k)), values sorted ascending.
    Uniform rows give 0, one-hot rows give (N-1)/N.

    Raises:
        AttentionError: If a row sums to zero
    """
    rows = _as_rows(ca_rows)
    n = rows.shape[1]
    totals = rows.sum(axis=1)
    zero = np.flatnonzero(totals <= 0)
    if zero.size:
        raise AttentionError(f"Gini undefined for row {zero[0]}: attention mass is zero")

    ordered = np.sort(rows, axis=1)
    ranks = 2.0 * np.arange(1, n + 1, dtype=np.float64) - n - 1
    g = (ordered @ ranks) / (n * totals)
    # Rounding can push flat rows a hair below zero
    return RelevanceWeights(g=np.maximum(g, 0.0), strategy="gini")


def max_weights(ca_rows) -> RelevanceWeights:
    """Peak attention of each row."""
    rows = _as_rows(ca_rows)
    _check_distributions(rows)
    return RelevanceWeights(g=rows.max(axis=1), strategy="max")


def entropy_weights(ca_rows) -> RelevanceWeights:
    """One minus the entropy of each row, normalized by ln N.

    A single-frame row (N = 1) is fully concentrated and gets weight 1.
    """
    rows = _as_rows(ca_rows)
    _check_distributions(rows)
    n = rows.shape[1]
    if n == 1:
        return RelevanceWeights(g=np.ones(rows.shape[0]), strategy="entropy")

    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(rows > 0, rows * np.log(rows), 0.0)
    entropy = -terms.sum(axis=1)
    g = 1.0 - entropy / np.log(n)
    return RelevanceWeights(g=np.clip(g, 0.0, 1.0), strategy="entropy")


def identity_weights(n_prompt: int) -> RelevanceWeights:
    return RelevanceWeights(g=np.ones(n_prompt), strategy="none")


STRATEGIES: dict[str, Callable[[np.ndarray], RelevanceWeights]] = {
    "gini": gini_weights,
    "max": max_weights,
    "entropy": entropy_weights,
}


def relevance_weights(ca_rows, strategy: str) -> RelevanceWeights:
    """Dispatch on strategy name; "none" yields all-ones weights.

    Raises:
        ValueError: On an unknown strategy
    """
    strategy = normalize_strategy(strategy)
    if strategy == "none":
        return identity_weights(np.asarray(ca_rows).shape[0])
    return STRATEGIES[strategy](ca_rows)


def gini_mean_difference(row) -> float:
    """Gini as mean absolute difference: sum_ij |x_i - x_j| / (2 N^2 mean).

    Quadratic in N; kept as a cross-check for ``gini_weights``.
    """
    x = np.asarray(row, dtype=np.float64)
    n = x.size
    return float(np.abs(x[:, None] - x[None, :]).sum() / (2 * n * n * x.mean()))
