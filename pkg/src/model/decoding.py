"""Greedy decoding with a subtitle prompt prefix and relevance-weighted attention."""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
import torch
from torch.nn import functional as F

from ..attention.weights import AttentionMaps, RelevanceWeights, identity_weights, relevance_weights
from ..core.models import WAConfig
from ..text.prompt import assemble_decoder_input
from ..text.tokenizer import Vocab
from .seq2seq import PromptWeighting, SubtitlePromptedSeq2Seq

logger = logging.getLogger(__name__)


@dataclass(eq=False)
class DecodeOutput:
    """Result of decoding one utterance."""

    tokens: list[int]
    text: str
    cross_attention: AttentionMaps
    weights: RelevanceWeights
    score: float
    strategy: str


def reduce_heads(probs: torch.Tensor, head_reduction) -> np.ndarray:
    """Collapse (H, T, N) attention to (T, N) by head mean or a single head."""
    if head_reduction == "mean":
        reduced = probs.mean(dim=0)
    else:
        reduced = probs[int(head_reduction)]
    return reduced.detach().to(torch.float64).cpu().numpy()


@torch.no_grad()
def greedy_decode(
    model: SubtitlePromptedSeq2Seq,
    vocab: Vocab,
    features: np.ndarray,
    subtitle: str,
    wa: Optional[WAConfig] = None,
    weights: Optional[RelevanceWeights] = None,
) -> DecodeOutput:
    """Decode one utterance greedily.

    1. Run the prefix <|sop|> prompt <|sot|> <|lang|> <|transcribe|> <|notimestamps|>
       and capture first-layer cross-attention rows of the prompt tokens.
    2. Turn those rows into relevance weights per ``wa.strategy``.
    3. Generate, rescaling the prompt segment of self-attention keys/values in
       the configured layers at every generation step.

    Strategy "none" skips steps 2 and 3.

    Args:
        model: Trained model (left unchanged)
        vocab: Vocabulary the model was trained with
        features: (N, d_feat) frames
        subtitle: Subtitle prompt text
        wa: Weighting settings; defaults to prompt on, strategy none
        weights: Explicit weights overriding the strategy (length T_p)

    Returns:
        DecodeOutput with generated ids (no prompt/control tokens), text,
        captured prompt cross-attention and mean log-probability
    """
    wa = wa or WAConfig()
    config = model.config
    prompt = subtitle if wa.use_prompt else ""
    prefix = assemble_decoder_input(vocab, prompt, "", max_seq=config.max_seq).prefix_ids
    n_prompt = len(prefix) - 5

    strategy = wa.strategy
    if n_prompt == 0 and (strategy != "none" or weights is not None):
        logger.warning(f"Empty prompt: weighting strategy {strategy!r} falls back to none")
        strategy, weights = "none", None

    was_training = model.training
    model.eval()
    try:
        feats = torch.as_tensor(np.asarray(features), dtype=model.dtype)[None]
        cache = model.start_cache(feats)
        logits, cross = model.decode_step(torch.tensor([prefix], dtype=torch.long), cache)

        rows = reduce_heads(cross[0], config.head_reduction)[1 : 1 + n_prompt]
        maps = AttentionMaps(ca=rows, layer_index=0)

        weighting = None
        if weights is not None:
            if len(weights) != n_prompt:
                raise ValueError(f"{len(weights)} explicit weights for {n_prompt} prompt tokens")
            strategy = weights.strategy
        elif strategy == "none":
            weights = identity_weights(n_prompt)
        else:
            weights = relevance_weights(maps.ca, strategy)

        if strategy != "none":
            g = torch.cat(
                [torch.ones(1, dtype=model.dtype), torch.as_tensor(weights.g, dtype=model.dtype)]
            )
            weighting = PromptWeighting(
                g=g,
                prompt_end=1 + n_prompt,
                layers=frozenset(wa.layer_indices(config.n_dec_layers)),
                scale_keys=config.scale_keys,
            )

        # Generation may only end with <|eot|>; other specials are never emitted
        banned = torch.zeros(model.vocab_size, dtype=torch.bool)
        banned[: vocab.n_specials] = True
        banned[vocab.eot_id] = False

        tokens: list[int] = []
        log_probs: list[float] = []
        step_logits = logits[0, -1]
        while True:
            step_logits = step_logits.masked_fill(banned, float("-inf"))
            next_id = int(torch.argmax(step_logits))
            log_probs.append(float(F.log_softmax(step_logits, dim=-1)[next_id]))
            if next_id == vocab.eot_id:
                break
            tokens.append(next_id)
            # Leave room for <|eot|> so the output can be trained on again
            if len(prefix) + len(tokens) + 1 >= config.max_seq:
                logger.debug(f"Decoding stopped at max_seq={config.max_seq}")
                break
            logits, _ = model.decode_step(torch.tensor([[next_id]], dtype=torch.long), cache, weighting)
            step_logits = logits[0, -1]
    finally:
        model.train(was_training)

    return DecodeOutput(
        tokens=tokens,
        text=vocab.decode(tokens),
        cross_attention=maps,
        weights=weights,
        score=float(np.mean(log_probs)),
        strategy=strategy,
    )
