"""Iterative pseudo-label refinement.

state_0 holds the bootstrapped pseudo labels Y_pt_0. Each iteration
fine-tunes on (features, subtitle prompt, Y_pt_{t-1}), regenerates the whole
training manifest to get Y_pt_t, scores the held-out set and persists
``iter<t>/{checkpoint, manifest.jsonl, metrics.json}``.
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from ..core.constants import (
    CHECKPOINT_DIR_NAME,
    ITERATION_DIR_TEMPLATE,
    MANIFEST_FILE_NAME,
    METRICS_FILE_NAME,
)
from ..core.errors import CheckpointError, ManifestError
from ..core.events import EventCallback, IterationCompletedEvent, IterationStartedEvent, emit
from ..core.models import FilterConfig, IterationConfig, ModelConfig, OptimConfig, WAConfig
from ..evaluation.metrics import EvalReport, breakdown_wer
from ..model.decoding import DecodeOutput, greedy_decode
from ..model.seq2seq import SubtitlePromptedSeq2Seq
from ..model.training import TrainingExample, train
from ..storage.checkpoint_storage import load_checkpoint, save_checkpoint
from ..storage.files import atomic_write_json
from ..storage.manifest_storage import TrainingUtterance, Utterance, load_manifest, write_manifest
from ..text.prompt import FilterVerdict, assemble_decoder_input, hallucination_filter
from ..text.tokenizer import Vocab, build_vocab, normalize_text

logger = logging.getLogger(__name__)


@dataclass
class RefineSetup:
    """Everything an iteration needs besides the previous state."""

    vocab: Vocab
    heldout: list[Utterance]
    freqs: dict[str, int]
    model: ModelConfig = field(default_factory=ModelConfig)
    optim: OptimConfig = field(default_factory=OptimConfig)
    filter: FilterConfig = field(default_factory=FilterConfig)
    iteration: IterationConfig = field(default_factory=IterationConfig)
    rare_threshold: int = 10


@dataclass
class IterationState:
    """One point of the refinement loop as persisted on disk."""

    t: int
    manifest: list[Utterance]
    checkpoint: Path
    metrics: dict[str, EvalReport]
    train_losses: list[float] = field(default_factory=list)
    filtered: list[str] = field(default_factory=list)

    @property
    def wer(self) -> float:
        """Headline held-out WER: weighted decoding when present, else the pseudo labels."""
        report = self.metrics.get("wa") or self.metrics.get("pseudo")
        return report.wer


def iteration_dir(run_dir: Path, t: int) -> Path:
    return Path(run_dir) / ITERATION_DIR_TEMPLATE.format(t=t)


# ==================== Training data ====================


def run_vocab(
    train: Sequence[Utterance],
    heldout: Sequence[Utterance] = (),
    corpus: Optional[Sequence[str]] = None,
) -> Vocab:
    """Vocabulary over the training text, the training subtitles and the held-out subtitles.

    ``corpus`` defaults to the training pseudo transcripts. Held-out references
    never contribute.
    """
    if corpus is None:
        corpus = [u.pseudo_transcript for u in train]
    return build_vocab(list(corpus) + [u.subtitle for u in train] + [u.subtitle for u in heldout])


def training_examples(
    utterances: Sequence[TrainingUtterance],
    vocab: Vocab,
    use_prompt: bool = True,
    max_seq: Optional[int] = None,
) -> list[TrainingExample]:
    """Assemble (features, subtitle prompt + pseudo target) examples.

    Only reference-free views are accepted.

    Raises:
        TypeError: If a full Utterance is passed
    """
    examples = []
    for utt in utterances:
        if not isinstance(utt, TrainingUtterance):
            raise TypeError(f"Training takes TrainingUtterance views, got {type(utt).__name__}")
        prompt = utt.subtitle if use_prompt else ""
        examples.append(
            TrainingExample(
                utterance_id=utt.id,
                features=utt.features,
                decoder_input=assemble_decoder_input(vocab, prompt, utt.pseudo_transcript, max_seq=max_seq),
            )
        )
    return examples


def apply_filter(utterances: Sequence[Utterance], filter_cfg: FilterConfig) -> tuple[list[Utterance], list[str]]:
    """Split utterances into filter survivors and the ids of dropped ones."""
    kept, dropped = [], []
    for utt in utterances:
        verdict = hallucination_filter(utt.pseudo_transcript, filter_cfg.max_tokens, filter_cfg.max_rep_ratio)
        if verdict is FilterVerdict.KEEP:
            kept.append(utt)
        else:
            dropped.append(utt.id)
    return kept, dropped


# ==================== Decoding and evaluation ====================


def decode_all(
    model: SubtitlePromptedSeq2Seq,
    vocab: Vocab,
    utterances: Sequence[Utterance],
    wa: WAConfig,
) -> list[DecodeOutput]:
    return [greedy_decode(model, vocab, utt.features, utt.subtitle, wa) for utt in utterances]


def score(
    utterances: Sequence[Utterance],
    hypotheses: Sequence[str],
    freqs: dict[str, int],
    rare_threshold: int,
) -> EvalReport:
    """Score hypotheses against the utterances' references."""
    missing = [u.id for u in utterances if u.reference is None]
    if missing:
        raise ManifestError("held-out utterance has no reference", missing[0])
    pairs = [(u.reference, hyp) for u, hyp in zip(utterances, hypotheses)]
    return breakdown_wer(pairs, freqs, rare_threshold)


def evaluate_heldout(model: SubtitlePromptedSeq2Seq, setup: RefineSetup, wa: WAConfig) -> dict[str, EvalReport]:
    """Held-out metrics without weighting ("sp") and with the configured weighting ("wa")."""
    plain = WAConfig(strategy="none", use_prompt=wa.use_prompt)
    sp_hyps = [out.text for out in decode_all(model, setup.vocab, setup.heldout, plain)]
    sp = score(setup.heldout, sp_hyps, setup.freqs, setup.rare_threshold)
    if wa.strategy == "none":
        return {"sp": sp, "wa": sp}
    wa_hyps = [out.text for out in decode_all(model, setup.vocab, setup.heldout, wa)]
    return {"sp": sp, "wa": score(setup.heldout, wa_hyps, setup.freqs, setup.rare_threshold)}


# ==================== Bootstrap ====================


def train_base_model(
    manifest: Sequence[Utterance],
    vocab: Vocab,
    model_cfg: ModelConfig,
    optim: OptimConfig,
    filter_cfg: Optional[FilterConfig] = None,
    callback: Optional[EventCallback] = None,
) -> SubtitlePromptedSeq2Seq:
    """Briefly train a no-prompt model on the channel pseudo labels."""
    model = SubtitlePromptedSeq2Seq(model_cfg, len(vocab))
    kept, _ = apply_filter(manifest, filter_cfg or FilterConfig())
    examples = training_examples([u.training_view() for u in kept], vocab, use_prompt=False, max_seq=model_cfg.max_seq)
    if optim.epochs > 0:
        train(model, examples, optim, vocab.pad_id, callback)
    return model


def bootstrap_pseudo_labels(
    manifest: Sequence[Utterance],
    filter_cfg: FilterConfig,
    base_model: Optional[SubtitlePromptedSeq2Seq] = None,
    vocab: Optional[Vocab] = None,
) -> list[Utterance]:
    """Produce Y_pt_0 and drop hallucinated entries.

    Without a base model the manifest's existing pseudo transcripts (the
    corruption channel) are kept; with one they are replaced by its
    no-prompt greedy decode.

    Returns:
        Filter survivors, in input order (never longer than the input)
    """
    if base_model is not None:
        if vocab is None:
            raise ValueError("A vocabulary is required to decode with a base model")
        plain = WAConfig(strategy="none", use_prompt=False)
        manifest = [
            utt.with_pseudo(out.text) for utt, out in zip(manifest, decode_all(base_model, vocab, manifest, plain))
        ]
    kept, dropped = apply_filter(manifest, filter_cfg)
    if dropped:
        logger.info(f"Hallucination filter removed {len(dropped)} of {len(manifest)} pseudo transcripts")
    return kept


# ==================== Persistence ====================


def _metrics_payload(state: IterationState, wa: Optional[WAConfig]) -> dict:
    payload = {"iteration": state.t}
    if wa is not None:
        payload["wa_label"] = wa.label
    payload["metrics"] = {name: report.model_dump() for name, report in state.metrics.items()}
    payload["train_losses"] = state.train_losses
    payload["filtered"] = state.filtered
    return payload


def persist_state(state: IterationState, run_dir: Path, model: SubtitlePromptedSeq2Seq, wa: Optional[WAConfig] = None):
    """Write checkpoint, manifest and (last, as the completion marker) metrics."""
    directory = iteration_dir(run_dir, state.t)
    save_checkpoint(model, directory / CHECKPOINT_DIR_NAME)
    write_manifest(state.manifest, directory / MANIFEST_FILE_NAME)
    atomic_write_json(directory / METRICS_FILE_NAME, _metrics_payload(state, wa))


def load_state(run_dir: Path, t: int) -> Optional[IterationState]:
    """Load a completed iteration from disk, or None if it never finished."""
    directory = iteration_dir(run_dir, t)
    metrics_path = directory / METRICS_FILE_NAME
    if not metrics_path.exists():
        return None
    payload = json.loads(metrics_path.read_text(encoding="utf-8"))
    checkpoint = directory / CHECKPOINT_DIR_NAME
    if not (checkpoint / "manifest.json").exists():
        raise CheckpointError(f"Iteration {t} metrics exist but its checkpoint is missing")
    return IterationState(
        t=t,
        manifest=load_manifest(directory / MANIFEST_FILE_NAME),
        checkpoint=checkpoint,
        metrics={name: EvalReport.model_validate(r) for name, r in payload["metrics"].items()},
        train_losses=payload.get("train_losses", []),
        filtered=payload.get("filtered", []),
    )


# ==================== Iterations ====================


def init_state(
    run_dir: Path,
    manifest: Sequence[Utterance],
    setup: RefineSetup,
    base_model: Optional[SubtitlePromptedSeq2Seq] = None,
) -> IterationState:
    """Persist state_0: bootstrapped labels, starting parameters and held-out pseudo-label WER.

    Resumes from disk when iteration 0 already exists.
    """
    existing = load_state(run_dir, 0)
    if existing is not None:
        logger.info(f"Resuming {run_dir} from iteration 0 on disk")
        return existing

    model = base_model if base_model is not None else SubtitlePromptedSeq2Seq(setup.model, len(setup.vocab))
    pseudo = score(setup.heldout, [u.pseudo_transcript for u in setup.heldout], setup.freqs, setup.rare_threshold)
    state = IterationState(
        t=0,
        manifest=list(manifest),
        checkpoint=iteration_dir(run_dir, 0) / CHECKPOINT_DIR_NAME,
        metrics={"pseudo": pseudo},
    )
    persist_state(state, run_dir, model)
    logger.info(f"Iteration 0: held-out pseudo-label WER {pseudo.wer:.2f}%")
    return state


def run_iteration(
    state: IterationState,
    setup: RefineSetup,
    wa: WAConfig,
    run_dir: Path,
    callback: Optional[EventCallback] = None,
) -> IterationState:
    """Fine-tune, regenerate pseudo labels, evaluate and persist one iteration.

    Args:
        state: state_{t-1}
        setup: Shared vocabulary, held-out set and settings
        wa: Prompting and weighting for training and decoding
        run_dir: Directory holding the iteration folders
        callback: Optional progress callback

    Returns:
        state_t

    Raises:
        TrainingError: On a non-finite loss; nothing of iteration t is written
    """
    t = state.t + 1
    total = setup.iteration.iterations
    emit(callback, IterationStartedEvent(iteration=t, total_iterations=total))

    if setup.iteration.cold_start:
        model = SubtitlePromptedSeq2Seq(setup.model, len(setup.vocab))
    else:
        model = load_checkpoint(state.checkpoint)

    examples = training_examples(
        [u.training_view() for u in state.manifest],
        setup.vocab,
        use_prompt=wa.use_prompt,
        max_seq=setup.model.max_seq,
    )
    losses: list[float] = []
    if setup.optim.epochs > 0:
        optim = setup.optim.model_copy(update={"seed": setup.optim.seed + t})
        losses = train(model, examples, optim, setup.vocab.pad_id, callback).epoch_losses

    regen_wa = setup.iteration.regen_wa or wa
    outputs = decode_all(model, setup.vocab, state.manifest, regen_wa)
    manifest, filtered = [], []
    for utt, out in zip(state.manifest, outputs):
        verdict = hallucination_filter(out.text, setup.filter.max_tokens, setup.filter.max_rep_ratio)
        if verdict is FilterVerdict.DROP:
            filtered.append(utt.id)
            manifest.append(utt)
        else:
            manifest.append(utt.with_pseudo(normalize_text(out.text)))
    if filtered:
        logger.info(f"Iteration {t}: filter rejected {len(filtered)} regenerated transcripts, keeping previous labels")

    metrics = evaluate_heldout(model, setup, wa)
    new_state = IterationState(
        t=t,
        manifest=manifest,
        checkpoint=iteration_dir(run_dir, t) / CHECKPOINT_DIR_NAME,
        metrics=metrics,
        train_losses=losses,
        filtered=filtered,
    )
    persist_state(new_state, run_dir, model, wa)

    logger.info(
        f"Iteration {t}/{total} [{wa.label}]: held-out WER {metrics['sp'].wer:.2f}% (SP), "
        f"{metrics['wa'].wer:.2f}% (WA)"
    )
    emit(
        callback,
        IterationCompletedEvent(
            iteration=t,
            total_iterations=total,
            wer=metrics["wa"].wer,
            details={"sp_wer": metrics["sp"].wer, "filtered": len(filtered)},
        ),
    )
    return new_state


def run_refinement(
    state: IterationState,
    setup: RefineSetup,
    wa: WAConfig,
    run_dir: Path,
    callback: Optional[EventCallback] = None,
) -> list[IterationState]:
    """Run iterations 1..N after ``state``, resuming any already on disk.

    Returns:
        States for t = 0..N
    """
    states = [state]
    for t in range(state.t + 1, setup.iteration.iterations + 1):
        existing = load_state(run_dir, t)
        if existing is not None:
            logger.info(f"Iteration {t} found on disk, skipping")
            state = existing
        else:
            state = run_iteration(state, setup, wa, run_dir, callback)
        states.append(state)
    return states
