"""Scaled dot-product attention and prompt-weighted key/value composition."""

import math
from typing import Optional, Union

import numpy as np
import torch
from torch import Tensor

from ..core.errors import AttentionError, ShapeError
from .weights import RelevanceWeights


def _weights_tensor(g: Union[RelevanceWeights, np.ndarray, Tensor], like: Tensor) -> Tensor:
    if isinstance(g, RelevanceWeights):
        g = g.g
    return torch.as_tensor(g, dtype=like.dtype, device=like.device)


def weighted_kv(
    g: Union[RelevanceWeights, np.ndarray, Tensor],
    k_prompt: Tensor,
    k_rest: Tensor,
    v_prompt: Tensor,
    v_rest: Tensor,
    scale_keys: bool = True,
) -> tuple[Tensor, Tensor]:
    """Scale prompt rows of K and V by g, then concatenate with the remaining rows.

    Shapes are (..., T_p, d) for the prompt part and (..., T_t, d) for the
    rest; leading batch/head dimensions must agree.

    Args:
        g: Relevance weight per prompt row
        k_prompt: Prompt keys
        k_rest: Remaining keys
        v_prompt: Prompt values
        v_rest: Remaining values
        scale_keys: Scale keys as well as values

    Returns:
        (K', V') each of shape (..., T_p + T_t, d)

    Raises:
        ShapeError: On any dimension mismatch
    """
    if k_prompt.shape[:-1] != v_prompt.shape[:-1]:
        raise ShapeError(f"Prompt keys {tuple(k_prompt.shape)} and values {tuple(v_prompt.shape)} disagree")
    if k_rest.shape[:-1] != v_rest.shape[:-1]:
        raise ShapeError(f"Keys {tuple(k_rest.shape)} and values {tuple(v_rest.shape)} disagree")
    if k_prompt.shape[:-2] != k_rest.shape[:-2]:
        raise ShapeError(f"Leading dimensions {tuple(k_prompt.shape[:-2])} vs {tuple(k_rest.shape[:-2])}")
    if k_prompt.shape[-1] != k_rest.shape[-1] or v_prompt.shape[-1] != v_rest.shape[-1]:
        raise ShapeError("Prompt and remaining rows have different feature widths")

    if isinstance(g, RelevanceWeights) and g.is_identity:
        return torch.cat([k_prompt, k_rest], dim=-2), torch.cat([v_prompt, v_rest], dim=-2)

    weights = _weights_tensor(g, k_prompt)
    if weights.ndim != 1 or weights.shape[0] != k_prompt.shape[-2]:
        raise ShapeError(f"{tuple(weights.shape)} weights for {k_prompt.shape[-2]} prompt rows")
    column = weights[:, None]

    k_scaled = k_prompt * column if scale_keys else k_prompt
    v_scaled = v_prompt * column
    return torch.cat([k_scaled, k_rest], dim=-2), torch.cat([v_scaled, v_rest], dim=-2)


def attention_with_weights(
    q: Tensor,
    k: Tensor,
    v: Tensor,
    mask: Optional[Tensor] = None,
) -> tuple[Tensor, Tensor]:
    """softmax(QK^T / sqrt(d) masked) V, also returning the attention probabilities.

    Args:
        q: Queries (..., T_q, d)
        k: Keys (..., T_k, d)
        v: Values (..., T_k, d_v)
        mask: Boolean (..., T_q, T_k), broadcastable; True marks an allowed position

    Returns:
        (output (..., T_q, d_v), probabilities (..., T_q, T_k))

    Raises:
        AttentionError: If any query row has no allowed position
    """
    if q.shape[-1] != k.shape[-1]:
        raise ShapeError(f"Query width {q.shape[-1]} != key width {k.shape[-1]}")
    if k.shape[-2] != v.shape[-2]:
        raise ShapeError(f"{k.shape[-2]} keys but {v.shape[-2]} values")

    scores = (q @ k.transpose(-2, -1)) / math.sqrt(q.shape[-1])
    if mask is not None:
        mask = mask.to(torch.bool)
        if not mask.any(dim=-1).all():
            raise AttentionError("Attention mask leaves a query row with no allowed position")
        scores = scores.masked_fill(~mask, float("-inf"))

    # Row max is a constant shift; detaching it keeps the gradient unchanged
    scores = scores - scores.amax(dim=-1, keepdim=True).detach()
    exp = scores.exp()
    probs = exp / exp.sum(dim=-1, keepdim=True)
    return probs @ v, probs


def attention(q: Tensor, k: Tensor, v: Tensor, mask: Optional[Tensor] = None) -> Tensor:
    """Masked scaled dot-product attention output only."""
    out, _ = attention_with_weights(q, k, v, mask)
    return out


def causal_mask(t_q: int, t_k: Optional[int] = None, device=None) -> Tensor:
    """Lower-triangular mask aligned to the end of the key sequence.

    With a KV cache, query i (of t_q new positions) may attend to keys up to
    t_k - t_q + i.
    """
    t_k = t_q if t_k is None else t_k
    offset = t_k - t_q
    rows = torch.arange(t_q, device=device)[:, None]
    cols = torch.arange(t_k, device=device)[None, :]
    return cols <= rows + offset
