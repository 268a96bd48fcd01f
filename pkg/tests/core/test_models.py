"""Tests for src/core/models.py - configuration models."""

import pytest
from pydantic import ValidationError

from src.core.errors import ConfigError
from src.core.models import ExperimentConfig, ModelConfig, OptimConfig, SynthConfig, WAConfig
from tests.factories import WAConfigFactory


class TestWAConfig:
    """Tests for WAConfig."""

    def test_defaults(self):
        """Test the default is prompted decoding without weighting."""
        wa = WAConfig()
        assert wa.strategy == "none"
        assert wa.layers == "all"
        assert wa.use_prompt is True

    def test_layer_string_parsed(self):
        """Test a comma list becomes integer layers."""
        assert WAConfig(layers="0, 2").layers == [0, 2]
        assert WAConfig(layers="ALL").layers == "all"

    def test_strategy_normalized(self):
        """Test strategy names are case-insensitive."""
        assert WAConfig(strategy="Entropy").strategy == "entropy"

    def test_unknown_strategy(self):
        """Test unknown strategies fail validation."""
        with pytest.raises(ValidationError):
            WAConfig(strategy="median")

    def test_layer_indices(self):
        """Test layer resolution against the decoder depth."""
        assert WAConfig(layers="all").layer_indices(3) == [0, 1, 2]
        assert WAConfig(layers=[2, 0, 2]).layer_indices(3) == [0, 2]

    def test_layer_out_of_range(self):
        """Test out-of-range layers raise ConfigError."""
        with pytest.raises(ConfigError):
            WAConfig(layers=[5]).layer_indices(2)

    @pytest.mark.parametrize(
        ("kwargs", "label"),
        [
            ({"use_prompt": False}, "no-prompt"),
            ({"strategy": "none"}, "sp"),
            ({"strategy": "gini"}, "sp+gini@all"),
            ({"strategy": "max", "layers": [0, 1]}, "sp+max@0-1"),
        ],
    )
    def test_labels(self, kwargs, label):
        """Test cell labels."""
        assert WAConfigFactory(**{"strategy": "none", **kwargs}).label == label


class TestModelConfig:
    """Tests for ModelConfig."""

    def test_heads_must_divide_width(self):
        """Test d_model must be divisible by n_heads."""
        with pytest.raises(ValidationError):
            ModelConfig(d_model=10, n_heads=3)

    def test_ff_width_default(self):
        """Test the feed-forward width defaults to four times d_model."""
        assert ModelConfig(d_model=16, n_heads=2).ff_width == 64
        assert ModelConfig(d_model=16, n_heads=2, d_ff=8).ff_width == 8

    def test_head_index_range(self):
        """Test a single-head reduction index must name a head."""
        with pytest.raises(ValidationError):
            ModelConfig(d_model=16, n_heads=2, head_reduction=2)


class TestOptimConfig:
    """Tests for OptimConfig."""

    def test_full_scale(self):
        """Test the full-scale preset with overrides."""
        optim = OptimConfig.full_scale(epochs=1)
        assert optim.lr == 1e-5
        assert optim.warmup_steps == 1000
        assert optim.epochs == 1

    def test_negative_lr(self):
        """Test a negative learning rate is rejected."""
        with pytest.raises(ValidationError):
            OptimConfig(lr=-1.0)


class TestSynthConfig:
    """Tests for SynthConfig."""

    def test_expected_pseudo_wer(self):
        """Test the channel corruption level formula."""
        cfg = SynthConfig(pseudo_p_del=0.1, pseudo_p_sub=0.1, pseudo_p_ins=0.0)
        assert cfg.expected_pseudo_wer() == pytest.approx(19.0)


class TestExperimentConfig:
    """Tests for ExperimentConfig."""

    def test_cells(self):
        """Test the grid lists no-prompt first, then one prompted cell per strategy."""
        cells = ExperimentConfig(strategies="none,gini").cells()
        assert [c.label for c in cells] == ["no-prompt", "sp", "sp+gini@all"]

    def test_cells_without_no_prompt(self):
        """Test the no-prompt cell can be left out."""
        cells = ExperimentConfig(strategies=["max"], include_no_prompt=False, wa_layers="1").cells()
        assert [c.label for c in cells] == ["sp+max@1"]

    def test_feature_width_follows_corpus(self):
        """Test the model input width is aligned with the synthetic features."""
        cfg = ExperimentConfig(synth=SynthConfig(d_feat=6))
        assert cfg.model.d_feat == 6

    def test_with_seed(self):
        """Test a seed reaches every stage."""
        cfg = ExperimentConfig().with_seed(7)
        assert (cfg.seed, cfg.synth.seed, cfg.model.seed, cfg.optim.seed) == (7, 7, 7, 7)
