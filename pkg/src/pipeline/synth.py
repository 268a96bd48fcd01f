"""Synthetic subtitled corpus.

Every utterance starts from a ground-truth word sequence drawn from a Zipf
vocabulary. Three views are derived from it:

- features: per-word prototype vectors repeated over a few frames, plus noise
- subtitle: the reference passed through a lossy subtitling channel that
  tends to keep rare (informative) words
- pseudo transcript: the reference passed through a base-recognizer channel
  that confuses rare words and sometimes loses the start of the utterance
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from ..core.models import SynthConfig
from ..storage.manifest_storage import Utterance

logger = logging.getLogger(__name__)

ONSETS = ["b", "d", "f", "g", "h", "k", "l", "m", "n", "p", "r", "s", "t", "v", "w", "z"]
VOWELS = ["a", "e", "i", "o", "u"]


@dataclass
class SynthDataset:
    """Generated splits plus the text the training-set frequencies come from."""

    train: list[Utterance]
    heldout: list[Utterance]
    train_corpus: list[str]
    word_types: list[str] = field(default_factory=list)
    rare_words: set[str] = field(default_factory=set)


def make_word_types(n: int, rng: np.random.Generator) -> list[str]:
    """Distinct pronounceable words of one to three consonant-vowel syllables."""
    words: list[str] = []
    seen: set[str] = set()
    while len(words) < n:
        n_syllables = int(rng.integers(1, 4))
        word = "".join(ONSETS[rng.integers(len(ONSETS))] + VOWELS[rng.integers(len(VOWELS))] for _ in range(n_syllables))
        if word not in seen:
            seen.add(word)
            words.append(word)
    return words


def zipf_probabilities(n: int, exponent: float) -> np.ndarray:
    ranks = np.arange(1, n + 1, dtype=np.float64)
    weights = ranks**-exponent
    return weights / weights.sum()


class _Channels:
    """Corruption channels sharing one random stream."""

    def __init__(self, cfg: SynthConfig, rng: np.random.Generator, probs: np.ndarray, rare: np.ndarray):
        self.cfg = cfg
        self.rng = rng
        self.probs = probs
        self.rare = rare

    def random_word(self) -> int:
        return int(self.rng.choice(len(self.probs), p=self.probs))

    def other_word(self, word: int) -> int:
        while True:
            candidate = self.random_word()
            if candidate != word:
                return candidate

    def subtitle(self, words: list[int]) -> list[int]:
        cfg = self.cfg
        out = []
        for w in words:
            p_drop = cfg.p_drop * (1.0 - cfg.rare_keep_boost) if self.rare[w] else cfg.p_drop
            if self.rng.random() >= p_drop:
                out.append(self.other_word(w) if self.rng.random() < cfg.p_sub else w)
            if self.rng.random() < cfg.p_ins:
                out.append(self.random_word())
        return out

    def pseudo(self, words: list[int]) -> list[int]:
        cfg = self.cfg
        start = 0
        if self.rng.random() < cfg.p_lead_del:
            start = int(self.rng.integers(1, max(1, len(words) // 2) + 1))
        out = []
        for w in words[start:]:
            if self.rng.random() >= cfg.pseudo_p_del:
                p_sub = cfg.pseudo_rare_sub if self.rare[w] else cfg.pseudo_p_sub
                out.append(self.other_word(w) if self.rng.random() < p_sub else w)
            if self.rng.random() < cfg.pseudo_p_ins:
                out.append(self.random_word())
        return out


def synth_dataset(cfg: SynthConfig) -> SynthDataset:
    """Generate train and held-out manifests from a seed.

    Args:
        cfg: Generator settings

    Returns:
        SynthDataset; the train corpus is the train split's pseudo transcripts
    """
    rng = np.random.default_rng(cfg.seed)
    word_types = make_word_types(cfg.n_word_types, rng)
    probs = zipf_probabilities(cfg.n_word_types, cfg.zipf_exponent)
    prototypes = rng.normal(size=(cfg.n_word_types, cfg.d_feat))

    mean_words = (cfg.words_per_utt_min + cfg.words_per_utt_max) / 2
    expected_train_counts = cfg.n_train * mean_words * probs
    rare = expected_train_counts < cfg.rare_threshold
    channels = _Channels(cfg, rng, probs, rare)

    def text(ids: list[int]) -> str:
        return " ".join(word_types[i] for i in ids)

    def make(prefix: str, count: int) -> list[Utterance]:
        utterances = []
        for index in range(count):
            length = int(rng.integers(cfg.words_per_utt_min, cfg.words_per_utt_max + 1))
            words = [int(w) for w in rng.choice(cfg.n_word_types, size=length, p=probs)]
            frames = []
            for w in words:
                n_frames = int(rng.integers(cfg.frames_per_word_min, cfg.frames_per_word_max + 1))
                noise = rng.normal(scale=cfg.feature_noise_sigma, size=(n_frames, cfg.d_feat))
                frames.append(prototypes[w] + noise)
            features = np.concatenate(frames).astype(np.float32)
            utterances.append(
                Utterance(
                    id=f"{prefix}-{index:05d}",
                    features=features,
                    subtitle=text(channels.subtitle(words)),
                    pseudo_transcript=text(channels.pseudo(words)),
                    reference=text(words),
                    duration_ms=features.shape[0] * cfg.frame_shift_ms,
                )
            )
        return utterances

    train = make("train", cfg.n_train)
    heldout = make("heldout", cfg.n_heldout)
    logger.info(
        f"Synthesized {len(train)} train / {len(heldout)} held-out utterances "
        f"({int(rare.sum())} of {cfg.n_word_types} word types rare)"
    )
    return SynthDataset(
        train=train,
        heldout=heldout,
        train_corpus=[u.pseudo_transcript for u in train],
        word_types=word_types,
        rare_words={word_types[i] for i in np.flatnonzero(rare)},
    )
