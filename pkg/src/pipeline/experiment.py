"""Experiment grid: {no-prompt, subtitle-prompted} x weighting strategies x iterations.

Layout under the output directory:
    data/{train,heldout}.jsonl, data/train_corpus.txt, vocab.json
    base/checkpoint                      (bootstrap_mode == "model")
    cells/<label>/iter<t>/...            (one refinement run per cell)
    report.json, report.txt
"""

import logging
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from ..core.constants import CHECKPOINT_DIR_NAME, METRICS_FILE_NAME, VOCAB_FILE_NAME
from ..core.events import (
    CellCompletedEvent,
    CellStartedEvent,
    CompleteEvent,
    ErrorEvent,
    EventCallback,
    emit,
)
from ..core.models import ExperimentConfig, WAConfig
from ..evaluation.metrics import breakdown_wer, corpus_wer, word_frequencies
from ..model.seq2seq import SubtitlePromptedSeq2Seq
from ..storage.checkpoint_storage import load_checkpoint, save_checkpoint
from ..storage.files import atomic_write_json, atomic_write_text
from ..storage.manifest_storage import Utterance, write_manifest
from ..text.tokenizer import Vocab
from .refine import (
    IterationState,
    RefineSetup,
    bootstrap_pseudo_labels,
    decode_all,
    init_state,
    iteration_dir,
    run_refinement,
    run_vocab,
    train_base_model,
)
from .report import (
    CellResult,
    ExperimentReport,
    IterationMetrics,
    LayerSweepResult,
    LayerSweepRow,
    render_report_text,
)
from .synth import synth_dataset

logger = logging.getLogger(__name__)

REPORT_JSON = "report.json"
REPORT_TEXT = "report.txt"


# ==================== Layer sweep ====================


def layer_sweep(
    model: SubtitlePromptedSeq2Seq,
    vocab: Vocab,
    heldout: Sequence[Utterance],
    strategy: str = "gini",
    layer_sets: Optional[Sequence[Union[str, list[int]]]] = None,
    n_folds: int = 5,
) -> LayerSweepResult:
    """Corpus WER per contiguous held-out fold for each weighted layer set.

    The first row is the unweighted baseline ("none"); by default every single
    decoder layer and "all" follow.
    """
    if layer_sets is None:
        layer_sets = [[i] for i in range(model.config.n_dec_layers)] + ["all"]
    folds = [fold for fold in np.array_split(np.arange(len(heldout)), min(n_folds, len(heldout))) if fold.size]

    candidates = [("none", WAConfig(strategy="none"))]
    for layers in layer_sets:
        wa = WAConfig(strategy=strategy, layers=layers)
        name = "all" if wa.layers == "all" else ",".join(str(i) for i in wa.layers)
        candidates.append((name, wa))

    rows = []
    for name, wa in candidates:
        hyps = [out.text for out in decode_all(model, vocab, heldout, wa)]
        fold_wer = [
            corpus_wer([(heldout[i].reference, hyps[i]) for i in fold]).wer for fold in folds
        ]
        rows.append(LayerSweepRow(layers=name, fold_wer=fold_wer, mean_wer=float(np.mean(fold_wer))))
        logger.info(f"Layer sweep {strategy}@{name}: mean WER {rows[-1].mean_wer:.2f}%")
    return LayerSweepResult(strategy=strategy, n_folds=len(folds), rows=rows)


# ==================== Grid ====================


def _cell_result(wa: WAConfig, states: list[IterationState]) -> CellResult:
    return CellResult(
        label=wa.label,
        use_prompt=wa.use_prompt,
        strategy=wa.strategy,
        layers=wa.layers,
        iterations=[
            IterationMetrics(iteration=s.t, sp=s.metrics["sp"], wa=s.metrics["wa"]) for s in states if s.t > 0
        ],
    )


def _base_model(
    config: ExperimentConfig,
    out_dir: Path,
    train: list[Utterance],
    vocab: Vocab,
    callback: Optional[EventCallback],
) -> SubtitlePromptedSeq2Seq:
    checkpoint = out_dir / "base" / CHECKPOINT_DIR_NAME
    if (checkpoint / "manifest.json").exists():
        return load_checkpoint(checkpoint)
    optim = config.optim.model_copy(update={"epochs": config.iteration.base_epochs})
    model = train_base_model(train, vocab, config.model, optim, config.filter, callback)
    save_checkpoint(model, checkpoint)
    return model


def run_experiment(
    config: ExperimentConfig,
    out_dir: Path,
    callback: Optional[EventCallback] = None,
) -> ExperimentReport:
    """Run every grid cell, resuming finished iterations, and write the report.

    A failing cell is recorded with its error and the remaining cells still run.

    Args:
        config: Experiment configuration
        out_dir: Output directory
        callback: Optional progress callback

    Returns:
        The consolidated report (also written to report.json / report.txt)
    """
    out_dir = Path(out_dir)
    dataset = synth_dataset(config.synth)
    write_manifest(dataset.train, out_dir / "data" / "train.jsonl")
    write_manifest(dataset.heldout, out_dir / "data" / "heldout.jsonl")
    atomic_write_text(out_dir / "data" / "train_corpus.txt", "".join(line + "\n" for line in dataset.train_corpus))

    vocab = run_vocab(dataset.train, dataset.heldout, dataset.train_corpus)
    vocab.save(out_dir / VOCAB_FILE_NAME)
    freqs = word_frequencies(dataset.train_corpus)

    heldout = dataset.heldout
    base_model = None
    if config.iteration.bootstrap_mode == "model":
        base_model = _base_model(config, out_dir, dataset.train, vocab, callback)
        plain = WAConfig(strategy="none", use_prompt=False)
        heldout = [u.with_pseudo(out.text) for u, out in zip(heldout, decode_all(base_model, vocab, heldout, plain))]
    manifest_0 = bootstrap_pseudo_labels(dataset.train, config.filter, base_model, vocab)

    bootstrap = breakdown_wer([(u.reference, u.pseudo_transcript) for u in heldout], freqs, config.rare_threshold)
    subtitles = breakdown_wer([(u.reference, u.subtitle) for u in heldout], freqs, config.rare_threshold)
    logger.info(f"Held-out pseudo-label WER {bootstrap.wer:.2f}%, subtitle WER {subtitles.wer:.2f}%")

    setup = RefineSetup(
        vocab=vocab,
        heldout=heldout,
        freqs=freqs,
        model=config.model,
        optim=config.optim,
        filter=config.filter,
        iteration=config.iteration,
        rare_threshold=config.rare_threshold,
    )

    cells = config.cells()
    results: list[CellResult] = []
    for index, wa in enumerate(cells, 1):
        cell_dir = out_dir / "cells" / wa.label
        emit(callback, CellStartedEvent(cell=wa.label, cell_index=index, total_cells=len(cells)))
        resumed = (iteration_dir(cell_dir, config.iteration.iterations) / METRICS_FILE_NAME).exists()
        try:
            state_0 = init_state(cell_dir, manifest_0, setup, base_model)
            states = run_refinement(state_0, setup, wa, cell_dir, callback)
            results.append(_cell_result(wa, states))
        except Exception as e:
            logger.error(f"Cell {wa.label} failed: {e}")
            emit(callback, ErrorEvent(error_message=str(e), cell=wa.label, recoverable=True))
            results.append(
                CellResult(label=wa.label, use_prompt=wa.use_prompt, strategy=wa.strategy, layers=wa.layers, error=str(e))
            )
            continue
        emit(callback, CellCompletedEvent(cell=wa.label, cell_index=index, total_cells=len(cells), resumed=resumed))

    sweep = None
    if config.layer_sweep:
        sweep = _sweep_from_cells(config, out_dir, cells, results, vocab, heldout)

    report = ExperimentReport(seed=config.seed, bootstrap=bootstrap, subtitles=subtitles, cells=results, layer_sweep=sweep)
    atomic_write_json(out_dir / REPORT_JSON, report.model_dump(mode="json"))
    atomic_write_text(out_dir / REPORT_TEXT, render_report_text(report))
    emit(callback, CompleteEvent(result={"cells": len(results)}, message=f"Report written to {out_dir / REPORT_JSON}"))
    return report


def _sweep_from_cells(
    config: ExperimentConfig,
    out_dir: Path,
    cells: list[WAConfig],
    results: list[CellResult],
    vocab: Vocab,
    heldout: list[Utterance],
) -> Optional[LayerSweepResult]:
    """Sweep layer sets on the final model of the first successful prompted cell."""
    for wa, result in zip(cells, results):
        if wa.use_prompt and result.error is None:
            final = iteration_dir(out_dir / "cells" / wa.label, config.iteration.iterations)
            model = load_checkpoint(final / CHECKPOINT_DIR_NAME)
            strategy = next((s for s in config.strategies if s != "none"), "gini")
            return layer_sweep(model, vocab, heldout, strategy, n_folds=config.n_folds)
    logger.warning("Layer sweep skipped: no prompted cell finished")
    return None
