"""Tests for src/pipeline/synth.py - synthetic subtitled corpus."""

import numpy as np
import pytest

from src.core.models import SynthConfig
from src.evaluation.metrics import corpus_wer
from src.pipeline.synth import make_word_types, synth_dataset, zipf_probabilities


class TestWordTypes:
    """Tests for the word inventory."""

    def test_distinct(self):
        """Test generated words are unique."""
        words = make_word_types(50, np.random.default_rng(0))
        assert len(words) == len(set(words)) == 50

    def test_zipf_normalized_and_decreasing(self):
        """Test probabilities sum to one and decrease with rank."""
        probs = zipf_probabilities(10, 1.1)
        assert probs.sum() == pytest.approx(1.0)
        assert np.all(np.diff(probs) < 0)


class TestSynthDataset:
    """Tests for synth_dataset."""

    def test_split_sizes_and_ids(self, tiny_dataset, tiny_synth_config):
        """Test split sizes and zero-padded ids."""
        assert len(tiny_dataset.train) == tiny_synth_config.n_train
        assert len(tiny_dataset.heldout) == tiny_synth_config.n_heldout
        assert tiny_dataset.train[0].id == "train-00000"
        assert tiny_dataset.heldout[-1].id == "heldout-00007"

    def test_deterministic(self, tiny_synth_config):
        """Test the same seed reproduces the corpus bit for bit."""
        a = synth_dataset(tiny_synth_config)
        b = synth_dataset(tiny_synth_config)
        assert a.train == b.train
        assert a.heldout == b.heldout
        assert a.train_corpus == b.train_corpus

    def test_seed_changes_corpus(self, tiny_synth_config):
        """Test a different seed gives a different corpus."""
        other = synth_dataset(tiny_synth_config.model_copy(update={"seed": 1}))
        assert other.train != synth_dataset(tiny_synth_config).train

    def test_feature_shapes(self, tiny_dataset, tiny_synth_config):
        """Test frame counts follow word counts and the feature width."""
        for utt in tiny_dataset.train:
            n_words = len(utt.reference.split())
            assert utt.features.shape[1] == tiny_synth_config.d_feat
            assert 2 * n_words <= utt.n_frames <= 3 * n_words
            assert utt.duration_ms == utt.n_frames * tiny_synth_config.frame_shift_ms

    def test_train_corpus_is_pseudo_transcripts(self, tiny_dataset):
        """Test training frequencies come from the pseudo labels, not references."""
        assert tiny_dataset.train_corpus == [u.pseudo_transcript for u in tiny_dataset.train]

    def test_references_use_word_inventory(self, tiny_dataset):
        """Test every reference word is a generated word type."""
        inventory = set(tiny_dataset.word_types)
        for utt in tiny_dataset.train + tiny_dataset.heldout:
            assert set(utt.reference.split()) <= inventory

    def test_clean_channels(self, tiny_synth_config):
        """Test zero corruption makes subtitles and pseudo labels verbatim."""
        clean = tiny_synth_config.model_copy(
            update={
                "p_drop": 0.0, "p_sub": 0.0, "p_ins": 0.0,
                "pseudo_p_del": 0.0, "pseudo_p_sub": 0.0, "pseudo_p_ins": 0.0,
                "pseudo_rare_sub": 0.0, "p_lead_del": 0.0,
            }
        )
        for utt in synth_dataset(clean).train:
            assert utt.subtitle == utt.reference
            assert utt.pseudo_transcript == utt.reference

    def test_pseudo_corruption_level(self):
        """Test pseudo-label WER lands near the channel's per-word corruption rate."""
        cfg = SynthConfig(
            n_train=500,
            n_heldout=1,
            d_feat=2,
            pseudo_rare_sub=0.08,
            p_lead_del=0.0,
            seed=7,
        )
        dataset = synth_dataset(cfg)
        wer = corpus_wer([(u.reference, u.pseudo_transcript) for u in dataset.train]).wer
        assert wer == pytest.approx(cfg.expected_pseudo_wer(), abs=2.5)

    def test_invalid_ranges_rejected(self):
        """Test min/max word counts are validated."""
        with pytest.raises(ValueError):
            SynthConfig(words_per_utt_min=5, words_per_utt_max=2)
