"""Miniature pre-norm encoder-decoder transformer.

Encoder: linear projection of feature frames + sinusoidal positions.
Decoder: token embeddings (tied with the output projection) + learned
positions, causal self-attention, cross-attention to all encoder frames.

The decoder runs either over a whole teacher-forced sequence or step by step
against a KV cache; the cached path can rescale the prompt segment of
self-attention keys/values by relevance weights.
"""

import hashlib
import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import torch
from torch import Tensor, nn
from torch.nn import functional as F

from ..attention.kernels import attention_with_weights, causal_mask, weighted_kv
from ..core.errors import ShapeError
from ..core.models import ModelConfig
from ..text.prompt import DecoderInput

logger = logging.getLogger(__name__)

DTYPES = {"float32": torch.float32, "float64": torch.float64}


def sinusoidal_positions(n: int, d_model: int, dtype: torch.dtype) -> Tensor:
    """PE(pos, 2i) = sin(pos / 10000^(2i/d)), PE(pos, 2i+1) = cos(...)."""
    position = torch.arange(n, dtype=torch.float64)[:, None]
    div_term = torch.exp(torch.arange(0, d_model, 2, dtype=torch.float64) * (-math.log(10000.0) / d_model))
    pe = torch.zeros(n, d_model, dtype=torch.float64)
    pe[:, 0::2] = torch.sin(position * div_term)
    pe[:, 1::2] = torch.cos(position * div_term)[:, : d_model // 2]
    return pe.to(dtype)


@dataclass
class PromptWeighting:
    """Relevance weights applied to cached self-attention keys/values.

    ``g`` covers positions [0, prompt_end): weight 1 for <|sop|>, then one
    weight per prompt token.
    """

    g: Tensor
    prompt_end: int
    layers: frozenset[int]
    scale_keys: bool = True


@dataclass
class LayerCache:
    self_k: Optional[Tensor] = None
    self_v: Optional[Tensor] = None
    cross_k: Optional[Tensor] = None
    cross_v: Optional[Tensor] = None


@dataclass
class DecoderCache:
    """Per-layer key/value cache for incremental decoding."""

    encoder_out: Tensor
    frame_mask: Optional[Tensor]
    layers: list[LayerCache] = field(default_factory=list)

    @property
    def length(self) -> int:
        first = self.layers[0].self_k if self.layers else None
        return 0 if first is None else first.shape[-2]


@dataclass
class ForwardCache:
    """Intermediate results of a teacher-forced pass."""

    encoder_out: Tensor
    cross_attention: Tensor  # first decoder layer, (B, H, T, N)


class MultiHeadAttention(nn.Module):
    """Multi-head attention on top of the shared attention kernels."""

    def __init__(self, d_model: int, n_heads: int):
        super().__init__()
        self.n_heads = n_heads
        self.d_head = d_model // n_heads
        self.wq = nn.Linear(d_model, d_model)
        self.wk = nn.Linear(d_model, d_model)
        self.wv = nn.Linear(d_model, d_model)
        self.wo = nn.Linear(d_model, d_model)

    def split(self, x: Tensor) -> Tensor:
        # (B, T, D) -> (B, H, T, d_head)
        b, t, _ = x.shape
        return x.view(b, t, self.n_heads, self.d_head).transpose(1, 2)

    def merge(self, x: Tensor) -> Tensor:
        b, _, t, _ = x.shape
        return x.transpose(1, 2).reshape(b, t, self.n_heads * self.d_head)

    def project_kv(self, x: Tensor) -> tuple[Tensor, Tensor]:
        return self.split(self.wk(x)), self.split(self.wv(x))

    def attend(self, q_in: Tensor, k: Tensor, v: Tensor, mask: Optional[Tensor]) -> tuple[Tensor, Tensor]:
        out, probs = attention_with_weights(self.split(self.wq(q_in)), k, v, mask)
        return self.wo(self.merge(out)), probs

    def forward(self, q_in: Tensor, kv_in: Tensor, mask: Optional[Tensor] = None) -> tuple[Tensor, Tensor]:
        k, v = self.project_kv(kv_in)
        return self.attend(q_in, k, v, mask)


class FeedForward(nn.Module):
    def __init__(self, d_model: int, d_ff: int):
        super().__init__()
        self.linear1 = nn.Linear(d_model, d_ff)
        self.linear2 = nn.Linear(d_ff, d_model)

    def forward(self, x: Tensor) -> Tensor:
        # GELU keeps the network smooth for finite-difference checks
        return self.linear2(F.gelu(self.linear1(x)))


class EncoderLayer(nn.Module):
    def __init__(self, config: ModelConfig):
        super().__init__()
        self.ln1 = nn.LayerNorm(config.d_model)
        self.self_attn = MultiHeadAttention(config.d_model, config.n_heads)
        self.ln2 = nn.LayerNorm(config.d_model)
        self.ffn = FeedForward(config.d_model, config.ff_width)

    def forward(self, x: Tensor, mask: Optional[Tensor]) -> Tensor:
        h = self.ln1(x)
        x = x + self.self_attn(h, h, mask)[0]
        return x + self.ffn(self.ln2(x))


class DecoderLayer(nn.Module):
    def __init__(self, config: ModelConfig):
        super().__init__()
        self.ln1 = nn.LayerNorm(config.d_model)
        self.self_attn = MultiHeadAttention(config.d_model, config.n_heads)
        self.ln2 = nn.LayerNorm(config.d_model)
        self.cross_attn = MultiHeadAttention(config.d_model, config.n_heads)
        self.ln3 = nn.LayerNorm(config.d_model)
        self.ffn = FeedForward(config.d_model, config.ff_width)

    def forward(
        self,
        x: Tensor,
        encoder_out: Tensor,
        self_mask: Optional[Tensor],
        cross_mask: Optional[Tensor],
    ) -> tuple[Tensor, Tensor]:
        h = self.ln1(x)
        x = x + self.self_attn(h, h, self_mask)[0]
        cross_out, cross_probs = self.cross_attn(self.ln2(x), encoder_out, cross_mask)
        x = x + cross_out
        return x + self.ffn(self.ln3(x)), cross_probs

    def step(
        self,
        x: Tensor,
        cache: LayerCache,
        cross_mask: Optional[Tensor],
        weighting: Optional[PromptWeighting],
    ) -> tuple[Tensor, Tensor]:
        """Process new positions against the cache, appending their keys/values."""
        h = self.ln1(x)
        new_k, new_v = self.self_attn.project_kv(h)
        if cache.self_k is None:
            cache.self_k, cache.self_v = new_k, new_v
        else:
            cache.self_k = torch.cat([cache.self_k, new_k], dim=-2)
            cache.self_v = torch.cat([cache.self_v, new_v], dim=-2)

        k, v = cache.self_k, cache.self_v
        if weighting is not None:
            p = weighting.prompt_end
            k, v = weighted_kv(
                weighting.g,
                k[..., :p, :],
                k[..., p:, :],
                v[..., :p, :],
                v[..., p:, :],
                scale_keys=weighting.scale_keys,
            )

        mask = causal_mask(x.shape[1], k.shape[-2], device=x.device)
        x = x + self.self_attn.attend(h, k, v, mask)[0]
        cross_out, cross_probs = self.cross_attn.attend(self.ln2(x), cache.cross_k, cache.cross_v, cross_mask)
        x = x + cross_out
        return x + self.ffn(self.ln3(x)), cross_probs


class SubtitlePromptedSeq2Seq(nn.Module):
    """Encoder-decoder whose decoder input carries a subtitle prompt."""

    def __init__(self, config: ModelConfig, vocab_size: int):
        super().__init__()
        self.config = config
        self.vocab_size = vocab_size

        # Parameter initialization is a pure function of the seed
        with torch.random.fork_rng(devices=[]):
            torch.manual_seed(config.seed)
            self.frame_proj = nn.Linear(config.d_feat, config.d_model)
            self.encoder_layers = nn.ModuleList(EncoderLayer(config) for _ in range(config.n_enc_layers))
            self.encoder_ln = nn.LayerNorm(config.d_model)

            self.token_embedding = nn.Embedding(vocab_size, config.d_model)
            self.position_embedding = nn.Parameter(torch.empty(config.max_seq, config.d_model))
            self.decoder_layers = nn.ModuleList(DecoderLayer(config) for _ in range(config.n_dec_layers))
            self.decoder_ln = nn.LayerNorm(config.d_model)

            nn.init.normal_(self.token_embedding.weight, std=0.02)
            nn.init.normal_(self.position_embedding, std=0.02)

        self.to(DTYPES[config.dtype])

    @property
    def dtype(self) -> torch.dtype:
        return DTYPES[self.config.dtype]

    # ==================== Encoder ====================

    def encode(self, features: Tensor, frame_mask: Optional[Tensor] = None) -> Tensor:
        """Encode (B, N, d_feat) frames to (B, N, d_model)."""
        if features.shape[-1] != self.config.d_feat:
            raise ShapeError(f"Feature width {features.shape[-1]} != d_feat {self.config.d_feat}")
        n = features.shape[1]
        x = self.frame_proj(features.to(self.dtype)) + sinusoidal_positions(n, self.config.d_model, self.dtype)
        mask = None if frame_mask is None else frame_mask[:, None, None, :]
        for layer in self.encoder_layers:
            x = layer(x, mask)
        return self.encoder_ln(x)

    # ==================== Decoder ====================

    def _embed(self, ids: Tensor, start: int) -> Tensor:
        end = start + ids.shape[1]
        if end > self.config.max_seq:
            raise ShapeError(f"Decoder sequence of length {end} exceeds max_seq={self.config.max_seq}")
        return self.token_embedding(ids) + self.position_embedding[start:end]

    def _project(self, x: Tensor) -> Tensor:
        return self.decoder_ln(x) @ self.token_embedding.weight.T

    def forward(
        self,
        features: Tensor,
        ids: Tensor,
        frame_mask: Optional[Tensor] = None,
        token_mask: Optional[Tensor] = None,
    ) -> tuple[Tensor, ForwardCache]:
        """Teacher-forced pass.

        Args:
            features: (B, N, d_feat) frames
            ids: (B, T) decoder token ids
            frame_mask: (B, N) True for real frames
            token_mask: (B, T) True for real tokens

        Returns:
            (logits (B, T, V), ForwardCache)
        """
        encoder_out = self.encode(features, frame_mask)
        t = ids.shape[1]
        x = self._embed(ids, 0)

        self_mask = causal_mask(t, device=ids.device)[None, None]
        if token_mask is not None:
            self_mask = self_mask & token_mask[:, None, None, :]
        cross_mask = None if frame_mask is None else frame_mask[:, None, None, :]

        first_cross = None
        for layer in self.decoder_layers:
            x, cross_probs = layer(x, encoder_out, self_mask, cross_mask)
            if first_cross is None:
                first_cross = cross_probs
        return self._project(x), ForwardCache(encoder_out=encoder_out, cross_attention=first_cross)

    def start_cache(self, features: Tensor, frame_mask: Optional[Tensor] = None) -> DecoderCache:
        """Encode once and precompute cross-attention keys/values."""
        encoder_out = self.encode(features, frame_mask)
        cache = DecoderCache(encoder_out=encoder_out, frame_mask=frame_mask)
        for layer in self.decoder_layers:
            k, v = layer.cross_attn.project_kv(encoder_out)
            cache.layers.append(LayerCache(cross_k=k, cross_v=v))
        return cache

    def decode_step(
        self,
        ids: Tensor,
        cache: DecoderCache,
        weighting: Optional[PromptWeighting] = None,
    ) -> tuple[Tensor, Tensor]:
        """Run new positions through the decoder against the cache.

        Args:
            ids: (B, T_new) token ids continuing the cached sequence
            cache: Cache from ``start_cache``, extended in place
            weighting: Prompt relevance weights for the configured layers

        Returns:
            (logits (B, T_new, V), first-layer cross-attention (B, H, T_new, N))
        """
        x = self._embed(ids, cache.length)
        cross_mask = None if cache.frame_mask is None else cache.frame_mask[:, None, None, :]
        first_cross = None
        for index, (layer, layer_cache) in enumerate(zip(self.decoder_layers, cache.layers)):
            layer_weighting = weighting if weighting is not None and index in weighting.layers else None
            x, cross_probs = layer.step(x, layer_cache, cross_mask, layer_weighting)
            if first_cross is None:
                first_cross = cross_probs
        return self._project(x), first_cross

    def checksum(self) -> str:
        """Hex digest of all parameter bytes in name order."""
        digest = hashlib.sha256()
        for name, param in sorted(self.state_dict().items()):
            digest.update(name.encode())
            digest.update(param.detach().cpu().contiguous().numpy().tobytes())
        return digest.hexdigest()


# ==================== Batching and loss ====================


@dataclass
class Batch:
    """Padded tensors for a list of utterances."""

    features: Tensor
    frame_mask: Tensor
    ids: Tensor
    token_mask: Tensor
    loss_mask: Tensor
    utterance_ids: list[str]


def collate(
    features: Sequence[np.ndarray],
    inputs: Sequence[DecoderInput],
    pad_id: int,
    utterance_ids: Optional[Sequence[str]] = None,
) -> Batch:
    """Pad variable-length frames and token sequences into one batch."""
    if len(features) != len(inputs):
        raise ShapeError(f"{len(features)} feature matrices for {len(inputs)} decoder inputs")
    b = len(inputs)
    n_max = max(f.shape[0] for f in features)
    t_max = max(len(di) for di in inputs)
    d_feat = features[0].shape[1]

    feats = np.zeros((b, n_max, d_feat), dtype=np.float64)
    frame_mask = np.zeros((b, n_max), dtype=bool)
    ids = np.full((b, t_max), pad_id, dtype=np.int64)
    token_mask = np.zeros((b, t_max), dtype=bool)
    loss_mask = np.zeros((b, t_max), dtype=bool)
    for i, (f, di) in enumerate(zip(features, inputs)):
        if f.shape[1] != d_feat:
            raise ShapeError(f"Feature width {f.shape[1]} != {d_feat}")
        feats[i, : f.shape[0]] = f
        frame_mask[i, : f.shape[0]] = True
        ids[i, : len(di)] = di.ids
        token_mask[i, : len(di)] = True
        loss_mask[i, : len(di)] = di.loss_mask

    return Batch(
        features=torch.from_numpy(feats),
        frame_mask=torch.from_numpy(frame_mask),
        ids=torch.from_numpy(ids),
        token_mask=torch.from_numpy(token_mask),
        loss_mask=torch.from_numpy(loss_mask),
        utterance_ids=list(utterance_ids) if utterance_ids is not None else [str(i) for i in range(b)],
    )


def sequence_loss(logits: Tensor, ids: Tensor, loss_mask: Tensor) -> Tensor:
    """Mean next-token cross-entropy over masked positions.

    logits[..., t, :] predicts ids[..., t + 1]; it counts iff loss_mask[..., t + 1].
    Accepts unbatched (T, V) or batched (B, T, V) logits.

    Raises:
        ShapeError: On mismatched shapes or an empty mask
    """
    if logits.shape[:-1] != ids.shape or ids.shape != loss_mask.shape:
        raise ShapeError(
            f"logits {tuple(logits.shape)}, ids {tuple(ids.shape)} and mask {tuple(loss_mask.shape)} disagree"
        )
    predicted = logits[..., :-1, :]
    targets = ids[..., 1:]
    selected = loss_mask[..., 1:].to(torch.bool)
    if not selected.any():
        raise ShapeError("Loss mask selects no positions")
    return F.cross_entropy(predicted[selected], targets[selected])


def forward(
    model: SubtitlePromptedSeq2Seq,
    features: np.ndarray,
    decoder_input: DecoderInput,
) -> tuple[Tensor, ForwardCache]:
    """Unbatched teacher-forced pass.

    Returns:
        (logits (T, V), ForwardCache)
    """
    if len(decoder_input) > model.config.max_seq:
        raise ShapeError(f"Decoder input of length {len(decoder_input)} exceeds max_seq={model.config.max_seq}")
    feats = torch.as_tensor(np.asarray(features), dtype=model.dtype)[None]
    ids = torch.tensor(decoder_input.ids, dtype=torch.long)[None]
    logits, cache = model(feats, ids)
    return logits[0], cache


def loss(logits: Tensor, decoder_input: DecoderInput) -> Tensor:
    """Masked next-token loss for one decoder input."""
    ids = torch.tensor(decoder_input.ids, dtype=torch.long)
    mask = torch.tensor(decoder_input.loss_mask, dtype=torch.bool)
    return sequence_loss(logits, ids, mask)
