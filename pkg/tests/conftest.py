"""Global test fixtures for subrefine tests."""

import os
import tempfile
from pathlib import Path

import numpy as np
import pytest

# Set test environment before importing app modules
os.environ["SUBREFINE_DATA_DIR"] = tempfile.mkdtemp(prefix="subrefine_test_")

from src.core.models import FilterConfig, IterationConfig, ModelConfig, OptimConfig, SynthConfig
from src.model.seq2seq import SubtitlePromptedSeq2Seq
from src.pipeline.refine import RefineSetup, run_vocab
from src.pipeline.synth import synth_dataset
from src.evaluation.metrics import word_frequencies

FIXTURES_DIR = Path(__file__).parent / "fixtures"


@pytest.fixture
def fixtures_dir() -> Path:
    """Directory holding static test files."""
    return FIXTURES_DIR


@pytest.fixture
def srt_text() -> str:
    """Content of the sample SRT fixture."""
    return (FIXTURES_DIR / "sample.srt").read_text(encoding="utf-8")


@pytest.fixture
def run_dir(tmp_path: Path) -> Path:
    """Empty run directory for a single test."""
    path = tmp_path / "run"
    path.mkdir()
    return path


@pytest.fixture
def tiny_synth_config() -> SynthConfig:
    """A corpus small enough to train on in a unit test."""
    return SynthConfig(
        n_word_types=30,
        n_train=24,
        n_heldout=8,
        words_per_utt_min=2,
        words_per_utt_max=5,
        frames_per_word_min=2,
        frames_per_word_max=3,
        d_feat=4,
        seed=0,
    )


@pytest.fixture
def tiny_model_config() -> ModelConfig:
    """Two-layer decoder, one-layer encoder, 16 wide."""
    return ModelConfig(d_model=16, n_heads=2, n_enc_layers=1, n_dec_layers=2, d_feat=4, max_seq=64, seed=0)


@pytest.fixture
def tiny_optim_config() -> OptimConfig:
    return OptimConfig(lr=1e-3, warmup_steps=2, batch_size=8, epochs=1, seed=0)


@pytest.fixture
def tiny_dataset(tiny_synth_config):
    return synth_dataset(tiny_synth_config)


@pytest.fixture
def tiny_vocab(tiny_dataset):
    return run_vocab(tiny_dataset.train, tiny_dataset.heldout, tiny_dataset.train_corpus)


@pytest.fixture
def tiny_model(tiny_model_config, tiny_vocab) -> SubtitlePromptedSeq2Seq:
    """Freshly initialized model over the tiny vocabulary."""
    return SubtitlePromptedSeq2Seq(tiny_model_config, len(tiny_vocab))


@pytest.fixture
def tiny_setup(tiny_dataset, tiny_vocab, tiny_model_config, tiny_optim_config) -> RefineSetup:
    """Refinement setup over the tiny corpus with two iterations."""
    return RefineSetup(
        vocab=tiny_vocab,
        heldout=tiny_dataset.heldout,
        freqs=word_frequencies(tiny_dataset.train_corpus),
        model=tiny_model_config,
        optim=tiny_optim_config,
        filter=FilterConfig(),
        iteration=IterationConfig(iterations=2),
    )


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
