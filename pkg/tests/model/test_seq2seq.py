"""Tests for src/model/seq2seq.py - toy encoder-decoder forward pass, cache and loss."""

import numpy as np
import pytest
import torch
import torch.nn.functional as F

from src.core.errors import ShapeError
from src.model.seq2seq import SubtitlePromptedSeq2Seq, collate, forward, loss, sequence_loss
from src.text.prompt import assemble_decoder_input
from src.text.tokenizer import build_vocab
from tests.factories import ModelConfigFactory


@pytest.fixture
def vocab():
    return build_vocab(["de kat zit op de mat en de hond slaapt"])


@pytest.fixture
def model64(vocab):
    return SubtitlePromptedSeq2Seq(ModelConfigFactory(dtype="float64"), len(vocab))


@pytest.fixture
def features(rng):
    return rng.normal(size=(7, 4)).astype(np.float32)


class TestConstruction:
    """Tests for parameter initialization."""

    def test_same_seed_same_parameters(self, vocab):
        """Test initialization is a pure function of the seed."""
        a = SubtitlePromptedSeq2Seq(ModelConfigFactory(seed=3), len(vocab))
        b = SubtitlePromptedSeq2Seq(ModelConfigFactory(seed=3), len(vocab))
        assert a.checksum() == b.checksum()

    def test_different_seed_different_parameters(self, vocab):
        """Test a different seed changes the parameters."""
        a = SubtitlePromptedSeq2Seq(ModelConfigFactory(seed=3), len(vocab))
        b = SubtitlePromptedSeq2Seq(ModelConfigFactory(seed=4), len(vocab))
        assert a.checksum() != b.checksum()

    def test_global_rng_untouched(self, vocab):
        """Test construction does not advance the global torch generator."""
        torch.manual_seed(123)
        expected = torch.rand(1)
        torch.manual_seed(123)
        SubtitlePromptedSeq2Seq(ModelConfigFactory(), len(vocab))
        assert torch.equal(torch.rand(1), expected)

    def test_dtype(self, model64):
        """Test parameters follow the configured dtype."""
        assert all(p.dtype == torch.float64 for p in model64.parameters())


class TestForward:
    """Tests for the teacher-forced pass."""

    def test_shapes(self, model64, vocab, features):
        """Test logits are T x V and cross-attention is (1, H, T, N)."""
        di = assemble_decoder_input(vocab, "de kat", "de mat")
        logits, cache = forward(model64, features, di)
        assert logits.shape == (len(di), len(vocab))
        assert cache.cross_attention.shape == (1, 2, len(di), 7)
        np.testing.assert_allclose(cache.cross_attention.sum(-1).numpy(), 1.0, atol=1e-12)

    def test_causal(self, model64, vocab, features):
        """Test changing a later token leaves earlier logits unchanged."""
        a = assemble_decoder_input(vocab, "de kat", "de mat en")
        b = assemble_decoder_input(vocab, "de kat", "de mat hond")
        logits_a, _ = forward(model64, features, a)
        logits_b, _ = forward(model64, features, b)
        changed = len(a) - 2
        assert torch.equal(logits_a[:changed], logits_b[:changed])
        assert not torch.equal(logits_a[changed:], logits_b[changed:])

    def test_prompt_conditions_target(self, model64, vocab, features):
        """Test a different subtitle changes the target-position logits."""
        a = assemble_decoder_input(vocab, "de kat", "de mat")
        b = assemble_decoder_input(vocab, "de hond", "de mat")
        logits_a, _ = forward(model64, features, a)
        logits_b, _ = forward(model64, features, b)
        assert not torch.allclose(logits_a[-3:], logits_b[-3:])

    def test_too_long(self, vocab, features):
        """Test a decoder input longer than max_seq raises."""
        model = SubtitlePromptedSeq2Seq(ModelConfigFactory(max_seq=8), len(vocab))
        di = assemble_decoder_input(vocab, "de kat zit", "op de mat")
        with pytest.raises(ShapeError):
            forward(model, features, di)

    def test_feature_width_checked(self, model64, vocab):
        """Test frames of the wrong width are rejected."""
        with pytest.raises(ShapeError):
            forward(model64, np.zeros((3, 5)), assemble_decoder_input(vocab, "", "de"))

    def test_padding_does_not_change_outputs(self, model64, vocab, rng):
        """Test padded batch logits match unbatched logits at real positions."""
        feats = [rng.normal(size=(5, 4)), rng.normal(size=(9, 4))]
        inputs = [
            assemble_decoder_input(vocab, "de", "kat"),
            assemble_decoder_input(vocab, "de kat zit", "op de mat en de hond"),
        ]
        batch = collate(feats, inputs, vocab.pad_id)
        logits, _ = model64(batch.features, batch.ids, batch.frame_mask, batch.token_mask)
        for i, (f, di) in enumerate(zip(feats, inputs)):
            single, _ = forward(model64, f, di)
            torch.testing.assert_close(logits[i, : len(di)], single, atol=1e-10, rtol=0)


class TestDecoderCache:
    """Tests for incremental decoding against the full pass."""

    def test_step_matches_full_forward(self, model64, vocab, features):
        """Test prefix + one-token steps reproduce teacher-forced logits."""
        di = assemble_decoder_input(vocab, "de kat", "zit op de mat")
        full, _ = forward(model64, features, di)

        cache = model64.start_cache(torch.as_tensor(features, dtype=torch.float64)[None])
        prefix = di.prefix_length
        logits, _ = model64.decode_step(torch.tensor([di.ids[:prefix]]), cache)
        steps = [logits[0]]
        for token in di.ids[prefix:]:
            logits, _ = model64.decode_step(torch.tensor([[token]]), cache)
            steps.append(logits[0])
        torch.testing.assert_close(torch.cat(steps), full, atol=1e-10, rtol=0)
        assert cache.length == len(di)

    def test_step_past_max_seq(self, vocab, features):
        """Test the cache refuses positions beyond max_seq."""
        model = SubtitlePromptedSeq2Seq(ModelConfigFactory(max_seq=8), len(vocab))
        cache = model.start_cache(torch.as_tensor(features)[None])
        model.decode_step(torch.zeros(1, 8, dtype=torch.long), cache)
        with pytest.raises(ShapeError):
            model.decode_step(torch.zeros(1, 1, dtype=torch.long), cache)


class TestLoss:
    """Tests for the masked next-token loss."""

    def test_matches_manual_cross_entropy(self, model64, vocab, features):
        """Test the loss averages cross-entropy over target and eot predictions only."""
        di = assemble_decoder_input(vocab, "de kat", "op de mat")
        logits, _ = forward(model64, features, di)
        positions = [t for t in range(1, len(di)) if di.loss_mask[t]]
        manual = torch.stack(
            [F.cross_entropy(logits[t - 1][None], torch.tensor([di.ids[t]])) for t in positions]
        ).mean()
        torch.testing.assert_close(loss(logits, di), manual)
        assert len(positions) == di.target_length + 1

    def test_prompt_logits_do_not_matter(self, model64, vocab, features):
        """Test perturbing logits that predict prompt or control tokens leaves the loss unchanged."""
        di = assemble_decoder_input(vocab, "de kat", "op de mat")
        logits, _ = forward(model64, features, di)
        perturbed = logits.clone()
        noise = torch.randn(perturbed[: di.prefix_length - 1].shape, generator=torch.Generator().manual_seed(0), dtype=logits.dtype)
        perturbed[: di.prefix_length - 1] += 100.0 * noise
        assert torch.equal(loss(logits, di), loss(perturbed, di))

    def test_empty_mask(self):
        """Test a mask selecting nothing raises."""
        with pytest.raises(ShapeError):
            sequence_loss(torch.zeros(3, 5), torch.zeros(3, dtype=torch.long), torch.zeros(3, dtype=torch.bool))

    def test_shape_mismatch(self):
        """Test mismatched logits and ids raise."""
        with pytest.raises(ShapeError):
            sequence_loss(torch.zeros(3, 5), torch.zeros(4, dtype=torch.long), torch.ones(4, dtype=torch.bool))


class TestCollate:
    """Tests for collate."""

    def test_padding_and_masks(self, vocab):
        """Test sequences are padded with pad_id and masks mark real entries."""
        inputs = [assemble_decoder_input(vocab, "", "de"), assemble_decoder_input(vocab, "de kat", "de")]
        batch = collate([np.ones((2, 4)), np.ones((3, 4))], inputs, vocab.pad_id, ["a", "b"])
        assert batch.ids.shape == (2, 9)
        assert batch.ids[0, 7:].tolist() == [vocab.pad_id, vocab.pad_id]
        assert batch.token_mask.sum(dim=1).tolist() == [7, 9]
        assert batch.frame_mask.sum(dim=1).tolist() == [2, 3]
        assert batch.utterance_ids == ["a", "b"]

    def test_count_mismatch(self, vocab):
        """Test feature and input counts must agree."""
        with pytest.raises(ShapeError):
            collate([np.ones((2, 4))], [], vocab.pad_id)
