"""Synthetic data, SRT ingestion, pseudo-label refinement and the experiment grid."""

from .experiment import layer_sweep, run_experiment
from .ingest import ingest
from .refine import (
    IterationState,
    RefineSetup,
    bootstrap_pseudo_labels,
    init_state,
    run_iteration,
    run_refinement,
    run_vocab,
    training_examples,
)
from .report import ExperimentReport
from .synth import SynthDataset, synth_dataset

__all__ = [
    "synth_dataset",
    "SynthDataset",
    "ingest",
    "IterationState",
    "RefineSetup",
    "bootstrap_pseudo_labels",
    "init_state",
    "run_iteration",
    "run_refinement",
    "run_vocab",
    "training_examples",
    "run_experiment",
    "layer_sweep",
    "ExperimentReport",
]
