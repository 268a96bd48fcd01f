"""Teacher-forced training, exact gradients and finite-difference checks."""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import torch
from torch.optim.lr_scheduler import LambdaLR

from ..core.errors import TrainingError
from ..core.events import EpochCompletedEvent, EventCallback, emit
from ..core.models import OptimConfig
from ..text.prompt import DecoderInput
from .seq2seq import SubtitlePromptedSeq2Seq, collate, forward, loss, sequence_loss

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class TrainingExample:
    """Frames plus an assembled decoder input; built from subtitle and pseudo transcript only."""

    utterance_id: str
    features: np.ndarray
    decoder_input: DecoderInput


@dataclass
class TrainingResult:
    epoch_losses: list[float] = field(default_factory=list)
    steps: int = 0


def warmup_factor(warmup_steps: int):
    """Linear warmup to the base rate, then constant."""

    def factor(step: int) -> float:
        if warmup_steps <= 0:
            return 1.0
        return min(1.0, (step + 1) / warmup_steps)

    return factor


def _batches(examples: Sequence[TrainingExample], order: np.ndarray, batch_size: int):
    for start in range(0, len(order), batch_size):
        yield [examples[i] for i in order[start : start + batch_size]]


def batch_loss(model: SubtitlePromptedSeq2Seq, batch: Sequence[TrainingExample], pad_id: int) -> torch.Tensor:
    """Mean masked loss over a padded batch."""
    packed = collate(
        [ex.features for ex in batch],
        [ex.decoder_input for ex in batch],
        pad_id,
        [ex.utterance_id for ex in batch],
    )
    logits, _ = model(packed.features, packed.ids, packed.frame_mask, packed.token_mask)
    return sequence_loss(logits, packed.ids, packed.loss_mask)


@torch.no_grad()
def dataset_loss(
    model: SubtitlePromptedSeq2Seq,
    examples: Sequence[TrainingExample],
    pad_id: int,
    batch_size: int = 8,
) -> float:
    """Mean of per-batch losses over the dataset in its given order."""
    order = np.arange(len(examples))
    losses = [float(batch_loss(model, batch, pad_id)) for batch in _batches(examples, order, batch_size)]
    return float(np.mean(losses))


def train(
    model: SubtitlePromptedSeq2Seq,
    examples: Sequence[TrainingExample],
    optim: OptimConfig,
    pad_id: int,
    callback: Optional[EventCallback] = None,
) -> TrainingResult:
    """Fine-tune the model in place with Adam and linear warmup.

    Args:
        model: Model to update
        examples: Non-empty training set
        optim: Optimizer settings (the shuffle order derives from ``optim.seed``)
        pad_id: Padding token id
        callback: Optional progress callback

    Returns:
        Per-epoch mean losses

    Raises:
        TrainingError: On a non-finite loss, naming the batch and its utterances
    """
    if not examples:
        raise ValueError("Training set is empty")

    optimizer = torch.optim.Adam(
        model.parameters(),
        lr=optim.lr,
        betas=(optim.beta1, optim.beta2),
        eps=optim.eps,
    )
    scheduler = LambdaLR(optimizer, lr_lambda=warmup_factor(optim.warmup_steps))
    rng = np.random.default_rng(optim.seed)
    result = TrainingResult()

    model.train()
    for epoch in range(1, optim.epochs + 1):
        order = rng.permutation(len(examples))
        epoch_losses = []
        for batch_index, batch in enumerate(_batches(examples, order, optim.batch_size)):
            optimizer.zero_grad(set_to_none=True)
            value = batch_loss(model, batch, pad_id)
            if not torch.isfinite(value):
                raise TrainingError(
                    f"non-finite loss {float(value)} in epoch {epoch}",
                    batch_index,
                    [ex.utterance_id for ex in batch],
                )
            value.backward()
            if optim.grad_clip > 0:
                torch.nn.utils.clip_grad_norm_(model.parameters(), optim.grad_clip)
            optimizer.step()
            scheduler.step()
            result.steps += 1
            epoch_losses.append(float(value))
            logger.debug(f"epoch {epoch} batch {batch_index}: loss {float(value):.4f}")

        mean_loss = float(np.mean(epoch_losses))
        result.epoch_losses.append(mean_loss)
        logger.info(f"Epoch {epoch}/{optim.epochs}: mean loss {mean_loss:.4f}")
        emit(callback, EpochCompletedEvent(epoch=epoch, total_epochs=optim.epochs, mean_loss=mean_loss))

    model.eval()
    return result


def backward(
    model: SubtitlePromptedSeq2Seq,
    features: np.ndarray,
    decoder_input: DecoderInput,
) -> dict[str, torch.Tensor]:
    """Exact gradients of the single-utterance loss w.r.t. every parameter.

    Returns:
        Mapping of parameter name to gradient (zeros where the loss does not depend on it)
    """
    model.zero_grad(set_to_none=True)
    logits, _ = forward(model, features, decoder_input)
    loss(logits, decoder_input).backward()
    grads = {}
    for name, param in model.named_parameters():
        grads[name] = param.grad.detach().clone() if param.grad is not None else torch.zeros_like(param)
    model.zero_grad(set_to_none=True)
    return grads


@torch.no_grad()
def _loss_value(model: SubtitlePromptedSeq2Seq, features: np.ndarray, decoder_input: DecoderInput) -> float:
    logits, _ = forward(model, features, decoder_input)
    return float(loss(logits, decoder_input))


def gradient_check(
    model: SubtitlePromptedSeq2Seq,
    features: np.ndarray,
    decoder_input: DecoderInput,
    eps: float = 1e-4,
    sample: Optional[int] = 20,
    seed: int = 0,
) -> dict[str, float]:
    """Compare reverse-mode gradients with central finite differences.

    Relative error per entry is |a - n| / max(|a| + |n|, 1e-4), so entries
    whose true gradient is ~0 are judged on absolute error.

    Args:
        model: Model to check (use float64 for meaningful results)
        features: (N, d_feat) frames
        decoder_input: Decoder input
        eps: Finite-difference step
        sample: Entries checked per parameter (None checks all)
        seed: Entry sampling seed

    Returns:
        Worst relative error per parameter name
    """
    analytic = backward(model, features, decoder_input)
    rng = np.random.default_rng(seed)
    worst = {}

    for name, param in model.named_parameters():
        flat = param.data.view(-1)
        n = flat.numel()
        indices = np.arange(n) if sample is None or sample >= n else rng.choice(n, size=sample, replace=False)
        grad = analytic[name].view(-1)
        errors = []
        for i in indices:
            original = flat[i].item()
            flat[i] = original + eps
            plus = _loss_value(model, features, decoder_input)
            flat[i] = original - eps
            minus = _loss_value(model, features, decoder_input)
            flat[i] = original
            numeric = (plus - minus) / (2 * eps)
            a = grad[i].item()
            errors.append(abs(a - numeric) / max(abs(a) + abs(numeric), 1e-4))
        worst[name] = max(errors) if errors else 0.0
        if math.isnan(worst[name]):
            worst[name] = float("inf")
    return worst
