"""Main CLI entry point for subrefine."""

import json
import logging
from pathlib import Path
from typing import Optional

import torch
import typer
from rich.logging import RichHandler

from ..config import LOG_LEVEL, TORCH_THREADS, ensure_directories, get_run_dir, load_experiment_config, load_wa_config
from ..core.constants import (
    CHECKPOINT_DIR_NAME,
    EVAL_REPORT_FILE_NAME,
    FEATURE_SUFFIX,
    HYPOTHESES_FILE_NAME,
    MANIFEST_FILE_NAME,
    VOCAB_FILE_NAME,
)
from ..core.errors import ManifestError, SubrefineError
from ..evaluation.metrics import breakdown_wer, corpus_wer, word_frequencies
from ..model.decoding import greedy_decode
from ..pipeline.experiment import REPORT_JSON, layer_sweep, run_experiment
from ..pipeline.ingest import ingest as ingest_manifest
from ..pipeline.refine import (
    RefineSetup,
    bootstrap_pseudo_labels,
    init_state,
    run_refinement,
    run_vocab,
    train_base_model,
)
from ..pipeline.report import eval_table, report_tables, sweep_table
from ..pipeline.synth import synth_dataset
from ..storage.checkpoint_storage import load_checkpoint, save_checkpoint
from ..storage.files import atomic_write_json, atomic_write_text
from ..storage.manifest_storage import load_manifest, write_feature_file, write_manifest
from ..text.tokenizer import Vocab
from .console import console, header_panel, manifest_table, render_completion, render_error, render_event

logger = logging.getLogger(__name__)

app = typer.Typer(
    name="subrefine",
    help="Subtitle-prompted refinement of weakly supervised transcripts",
    add_completion=False,
    no_args_is_help=True,
)

# Shared options
SEED_OPTION = typer.Option(None, "--seed", help="Seed propagated to every stage")
CONFIG_OPTION = typer.Option(None, "--config", help="KEY=VALUE config file (e.g. OPTIM_LR=0.001)")
VERBOSE_OPTION = typer.Option(False, "--verbose", "-v", help="Debug logging")
WA_OPTION = typer.Option(None, "--wa", help="Weighting strategy: none, gini, max or entropy")
WA_LAYERS_OPTION = typer.Option(None, "--wa-layers", help="Decoder layers to weight: all or a comma list")
PROMPT_OPTION = typer.Option(None, "--prompt/--no-prompt", help="Condition on the subtitle prompt")


def setup_runtime(verbose: bool = False, seed: Optional[int] = None) -> None:
    """Configure logging through the shared console, pin torch threads and seed torch."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else LOG_LEVEL,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=console, show_path=False)],
        force=True,
    )
    torch.set_num_threads(TORCH_THREADS)
    if seed is not None:
        torch.manual_seed(seed)


def fail(error: Exception) -> None:
    """Print the error panel and exit with code 1."""
    console.print(render_error(str(error)))
    raise typer.Exit(1)


def resolve_out_dir(out_dir: Optional[Path], command: str) -> Path:
    if out_dir is not None:
        return out_dir
    ensure_directories()
    return get_run_dir(command)


def resolve_output(out: Optional[Path], out_dir: Optional[Path], command: str, file_name: str) -> Path:
    """Explicit --out, else <file_name> in the --out-dir or the command's run directory."""
    if out is not None:
        return out
    return resolve_out_dir(out_dir, command) / file_name


def read_lines(path: Path) -> list[str]:
    if not path.exists():
        raise ManifestError(f"file not found: {path}")
    return [line for line in path.read_text(encoding="utf-8").splitlines() if line.strip()]


def load_or_build_vocab(out_dir: Path, train, heldout=(), corpus=None) -> Vocab:
    """Reuse the run's vocab.json, else build one from the manifests and save it."""
    path = out_dir / VOCAB_FILE_NAME
    if path.exists():
        return Vocab.load(path)
    vocab = run_vocab(train, heldout, corpus)
    vocab.save(path)
    return vocab


# ==================== Data ====================


@app.command("synth")
def synth_cmd(
    out_dir: Optional[Path] = typer.Option(None, "--out-dir", help="Output directory"),
    seed: Optional[int] = SEED_OPTION,
    config: Optional[Path] = CONFIG_OPTION,
    verbose: bool = VERBOSE_OPTION,
):
    """Generate a synthetic subtitled corpus (train and held-out manifests)."""
    setup_runtime(verbose)
    out_dir = resolve_out_dir(out_dir, "synth")
    try:
        cfg = load_experiment_config(config, seed)
        dataset = synth_dataset(cfg.synth)
        write_manifest(dataset.train, out_dir / "train.jsonl")
        write_manifest(dataset.heldout, out_dir / "heldout.jsonl")
        atomic_write_text(out_dir / "train_corpus.txt", "".join(line + "\n" for line in dataset.train_corpus))
        vocab = run_vocab(dataset.train, dataset.heldout, dataset.train_corpus)
        vocab.save(out_dir / VOCAB_FILE_NAME)
    except SubrefineError as e:
        fail(e)

    console.print(manifest_table(dataset.train, title="Train split"))
    console.print(
        render_completion(
            f"Corpus written to {out_dir}",
            {
                "Train": str(len(dataset.train)),
                "Held-out": str(len(dataset.heldout)),
                "Rare word types": f"{len(dataset.rare_words)} of {len(dataset.word_types)}",
                "Vocabulary": str(len(vocab)),
            },
        )
    )


@app.command("ingest")
def ingest_cmd(
    srt: Path = typer.Option(..., "--srt", help="SubRip subtitle file"),
    features: Path = typer.Option(..., "--features", help="Directory with segments.jsonl and .sbrf sidecars"),
    out: Optional[Path] = typer.Option(None, "--out", help="Output manifest (JSON Lines)"),
    out_dir: Optional[Path] = typer.Option(None, "--out-dir", help="Output directory (manifest.jsonl)"),
    seed: Optional[int] = SEED_OPTION,
    verbose: bool = VERBOSE_OPTION,
):
    """Pair precomputed feature segments with overlapping subtitle text."""
    setup_runtime(verbose, seed)
    out = resolve_output(out, out_dir, "ingest", MANIFEST_FILE_NAME)
    if not srt.exists():
        fail(ManifestError(f"SRT file not found: {srt}"))
    try:
        utterances = ingest_manifest(srt, features)
        write_manifest(utterances, out)
    except SubrefineError as e:
        fail(e)

    console.print(manifest_table(utterances, title=srt.name))
    console.print(render_completion(f"Manifest written to {out}", {"Utterances": str(len(utterances))}))


@app.command("bootstrap")
def bootstrap_cmd(
    train_manifest: Path = typer.Option(..., "--train", help="Training manifest with channel pseudo labels"),
    mode: str = typer.Option("channel", "--mode", help="channel (keep labels) or model (decode with a base model)"),
    out_dir: Optional[Path] = typer.Option(None, "--out-dir", help="Output directory"),
    seed: Optional[int] = SEED_OPTION,
    config: Optional[Path] = CONFIG_OPTION,
    verbose: bool = VERBOSE_OPTION,
):
    """Produce the filtered starting pseudo labels."""
    setup_runtime(verbose)
    out_dir = resolve_out_dir(out_dir, "bootstrap")
    if mode not in ("channel", "model"):
        fail(SubrefineError(f"Unknown bootstrap mode: {mode} (expected channel or model)"))
    try:
        cfg = load_experiment_config(config, seed)
        manifest = load_manifest(train_manifest)
        vocab = load_or_build_vocab(out_dir, manifest)
        base_model = None
        if mode == "model":
            optim = cfg.optim.model_copy(update={"epochs": cfg.iteration.base_epochs})
            base_model = train_base_model(manifest, vocab, cfg.model, optim, cfg.filter, render_event)
            save_checkpoint(base_model, out_dir / "base" / CHECKPOINT_DIR_NAME)
        kept = bootstrap_pseudo_labels(manifest, cfg.filter, base_model, vocab)
        write_manifest(kept, out_dir / MANIFEST_FILE_NAME)
    except SubrefineError as e:
        fail(e)

    console.print(
        render_completion(
            f"Bootstrapped labels written to {out_dir / MANIFEST_FILE_NAME}",
            {"Mode": mode, "Kept": f"{len(kept)} of {len(manifest)}"},
        )
    )


# ==================== Training ====================


@app.command("train")
def train_cmd(
    train_manifest: Path = typer.Option(..., "--train", help="Bootstrapped training manifest"),
    heldout_manifest: Path = typer.Option(..., "--heldout", help="Held-out manifest with references"),
    train_corpus: Optional[Path] = typer.Option(None, "--train-corpus", help="Text for rare/OOV statistics"),
    base_checkpoint: Optional[Path] = typer.Option(None, "--base-checkpoint", help="Start from this checkpoint"),
    iterations: Optional[int] = typer.Option(None, "--iterations", help="Refinement iterations"),
    wa: Optional[str] = WA_OPTION,
    wa_layers: Optional[str] = WA_LAYERS_OPTION,
    prompt: Optional[bool] = PROMPT_OPTION,
    out_dir: Optional[Path] = typer.Option(None, "--out-dir", help="Run directory"),
    seed: Optional[int] = SEED_OPTION,
    config: Optional[Path] = CONFIG_OPTION,
    verbose: bool = VERBOSE_OPTION,
):
    """Run the pseudo-label refinement loop, resuming iterations on disk."""
    setup_runtime(verbose)
    out_dir = resolve_out_dir(out_dir, "train")
    try:
        cfg = load_experiment_config(config, seed)
        wa_cfg = load_wa_config(config, strategy=wa, layers=wa_layers, use_prompt=prompt)
        iteration = cfg.iteration
        if iterations is not None:
            iteration = iteration.model_copy(update={"iterations": iterations})

        manifest = load_manifest(train_manifest)
        heldout = load_manifest(heldout_manifest)
        corpus = read_lines(train_corpus) if train_corpus else None
        vocab = load_or_build_vocab(out_dir, manifest, heldout, corpus)
        freqs = word_frequencies(corpus if corpus is not None else [u.pseudo_transcript for u in manifest])
        setup = RefineSetup(
            vocab=vocab,
            heldout=heldout,
            freqs=freqs,
            model=cfg.model,
            optim=cfg.optim,
            filter=cfg.filter,
            iteration=iteration,
            rare_threshold=cfg.rare_threshold,
        )
        base_model = load_checkpoint(base_checkpoint) if base_checkpoint else None

        console.print(header_panel("Refinement", f"{wa_cfg.label}, {iteration.iterations} iterations"))
        state_0 = init_state(out_dir, manifest, setup, base_model)
        states = run_refinement(state_0, setup, wa_cfg, out_dir, render_event)
    except SubrefineError as e:
        fail(e)

    reports = {"iter 0 (pseudo labels)": states[0].metrics["pseudo"]}
    for state in states[1:]:
        reports[f"iter {state.t} SP"] = state.metrics["sp"]
        reports[f"iter {state.t} WA"] = state.metrics["wa"]
    console.print(eval_table(reports, title=f"Held-out WER ({wa_cfg.label})"))


# ==================== Inference ====================


@app.command("decode")
def decode_cmd(
    checkpoint: Path = typer.Option(..., "--checkpoint", help="Checkpoint directory"),
    manifest_path: Path = typer.Option(..., "--manifest", help="Manifest to decode"),
    vocab_path: Path = typer.Option(..., "--vocab", help="vocab.json the model was trained with"),
    out: Optional[Path] = typer.Option(None, "--out", help="Output manifest; hypotheses replace the pseudo transcripts"),
    out_dir: Optional[Path] = typer.Option(None, "--out-dir", help="Output directory (hypotheses.jsonl)"),
    wa: Optional[str] = WA_OPTION,
    wa_layers: Optional[str] = WA_LAYERS_OPTION,
    prompt: Optional[bool] = PROMPT_OPTION,
    dump_attention: Optional[Path] = typer.Option(
        None, "--dump-attention", help="Write prompt cross-attention rows per utterance to this directory"
    ),
    sweep: bool = typer.Option(False, "--sweep", help="Also sweep weighted layer sets over held-out folds"),
    n_folds: int = typer.Option(5, "--n-folds", help="Folds for --sweep"),
    config: Optional[Path] = CONFIG_OPTION,
    seed: Optional[int] = SEED_OPTION,
    verbose: bool = VERBOSE_OPTION,
):
    """Greedy-decode a manifest with optional subtitle prompt and weighting."""
    setup_runtime(verbose, seed)
    out = resolve_output(out, out_dir, "decode", HYPOTHESES_FILE_NAME)
    try:
        wa_cfg = load_wa_config(config, strategy=wa, layers=wa_layers, use_prompt=prompt)
        model = load_checkpoint(checkpoint)
        vocab = Vocab.load(vocab_path)
        utterances = load_manifest(manifest_path)

        hypotheses = []
        with console.status(f"Decoding {len(utterances)} utterances ({wa_cfg.label})..."):
            for utt in utterances:
                output = greedy_decode(model, vocab, utt.features, utt.subtitle, wa_cfg)
                hypotheses.append(utt.with_pseudo(output.text))
                if dump_attention is not None:
                    write_feature_file(dump_attention / f"{utt.id}{FEATURE_SUFFIX}", output.cross_attention.ca)
        write_manifest(hypotheses, out)

        scored = all(u.reference is not None for u in utterances)
        if scored:
            report = corpus_wer([(u.reference, h.pseudo_transcript) for u, h in zip(utterances, hypotheses)])
            console.print(eval_table({wa_cfg.label: report}, title=manifest_path.name))

        if sweep:
            if not scored:
                raise ManifestError("--sweep needs references in the manifest")
            strategy = wa_cfg.strategy if wa_cfg.strategy != "none" else "gini"
            result = layer_sweep(model, vocab, utterances, strategy, n_folds=n_folds)
            atomic_write_json(out.with_name(f"{out.stem}.sweep.json"), result.model_dump(mode="json"))
            console.print(sweep_table(result))
    except SubrefineError as e:
        fail(e)

    console.print(render_completion(f"Hypotheses written to {out}", {"Utterances": str(len(hypotheses))}))


# ==================== Evaluation ====================


@app.command("eval")
def eval_cmd(
    ref: Path = typer.Option(..., "--ref", help="Manifest holding references"),
    hyp: Path = typer.Option(..., "--hyp", help="Manifest whose pseudo transcripts are the hypotheses"),
    train_corpus: Optional[Path] = typer.Option(None, "--train-corpus", help="Text for rare/OOV statistics"),
    rare_threshold: int = typer.Option(10, "--rare-threshold", help="Words seen fewer times are rare"),
    out: Optional[Path] = typer.Option(None, "--out", help="Write the JSON report here"),
    out_dir: Optional[Path] = typer.Option(None, "--out-dir", help="Output directory (report.json)"),
    seed: Optional[int] = SEED_OPTION,
    verbose: bool = VERBOSE_OPTION,
):
    """Corpus WER, and rare/OOV WER when a training corpus is given."""
    setup_runtime(verbose, seed)
    if out is None and out_dir is not None:
        out = out_dir / EVAL_REPORT_FILE_NAME
    try:
        references = load_manifest(ref)
        hyp_text = {u.id: u.pseudo_transcript for u in load_manifest(hyp)}
        pairs = []
        for utt in references:
            if utt.reference is None:
                raise ManifestError("reference missing", utt.id)
            if utt.id not in hyp_text:
                raise ManifestError(f"no hypothesis in {hyp}", utt.id)
            pairs.append((utt.reference, hyp_text[utt.id]))

        if train_corpus is not None:
            report = breakdown_wer(pairs, word_frequencies(read_lines(train_corpus)), rare_threshold)
        else:
            report = corpus_wer(pairs)
    except SubrefineError as e:
        fail(e)

    payload = report.model_dump(mode="json")
    console.print(eval_table({hyp.name: report}, title=f"{hyp.name} vs {ref.name}"))
    if out is not None:
        atomic_write_json(out, payload)
        console.print(f"[dim]Report written to {out}[/dim]")
    else:
        console.print_json(json.dumps(payload))


# ==================== Experiment ====================


@app.command("experiment")
def experiment_cmd(
    out_dir: Optional[Path] = typer.Option(None, "--out-dir", help="Output directory"),
    sweep: Optional[bool] = typer.Option(None, "--sweep/--no-sweep", help="Run the layer sweep"),
    seed: Optional[int] = SEED_OPTION,
    config: Optional[Path] = CONFIG_OPTION,
    verbose: bool = VERBOSE_OPTION,
):
    """Run the full grid: no-prompt and subtitle-prompted cells per weighting strategy."""
    setup_runtime(verbose)
    out_dir = resolve_out_dir(out_dir, "experiment")
    try:
        cfg = load_experiment_config(config, seed)
        if sweep is not None:
            cfg = cfg.model_copy(update={"layer_sweep": sweep})
        console.print(header_panel("Experiment", f"{len(cfg.cells())} cells, seed {cfg.seed}, {out_dir}"))
        report = run_experiment(cfg, out_dir, render_event)
    except SubrefineError as e:
        fail(e)

    console.print()
    for table in report_tables(report):
        console.print(table)
    failed = [cell.label for cell in report.cells if cell.error is not None]
    if failed:
        console.print(f"[yellow]Failed cells: {', '.join(failed)}[/yellow]")
    logger.debug(f"Report at {out_dir / REPORT_JSON}")


if __name__ == "__main__":
    app()
