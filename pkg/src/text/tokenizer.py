"""Word-level vocabulary with fixed special tokens."""

import json
import logging
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from ..core.constants import (
    EOT_TOKEN,
    LANG_TOKEN,
    NOTIMESTAMPS_TOKEN,
    PAD_TOKEN,
    SOP_TOKEN,
    SOT_TOKEN,
    SPECIAL_TOKENS,
    TRANSCRIBE_TOKEN,
    UNK_TOKEN,
)
from ..core.errors import ConfigError
from ..storage.files import atomic_write_json

logger = logging.getLogger(__name__)

# Letters/digits, optionally joined by intra-word apostrophes ("don't" stays whole)
RE_WORD = re.compile(r"[^\W_]+(?:'[^\W_]+)*")


def tokenize(text: str) -> list[str]:
    """Lowercase and split into words, dropping punctuation.

    Apostrophes survive only between two word characters.
    """
    return RE_WORD.findall(text.lower())


def normalize_text(text: str) -> str:
    """Canonical single-spaced form used for training targets and scoring."""
    return " ".join(tokenize(text))


@dataclass(frozen=True)
class Vocab:
    """Bijective word <-> id map; specials take ids 0..7."""

    word_of: tuple[str, ...]
    id_of: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if tuple(self.word_of[: len(SPECIAL_TOKENS)]) != tuple(SPECIAL_TOKENS):
            raise ConfigError("Vocabulary must start with the special tokens in canonical order")
        id_of = {word: i for i, word in enumerate(self.word_of)}
        if len(id_of) != len(self.word_of):
            raise ConfigError("Vocabulary contains duplicate entries")
        object.__setattr__(self, "id_of", id_of)

    def __len__(self) -> int:
        return len(self.word_of)

    def __contains__(self, word: str) -> bool:
        return word in self.id_of

    @property
    def sop_id(self) -> int:
        return self.id_of[SOP_TOKEN]

    @property
    def sot_id(self) -> int:
        return self.id_of[SOT_TOKEN]

    @property
    def lang_id(self) -> int:
        return self.id_of[LANG_TOKEN]

    @property
    def transcribe_id(self) -> int:
        return self.id_of[TRANSCRIBE_TOKEN]

    @property
    def notimestamps_id(self) -> int:
        return self.id_of[NOTIMESTAMPS_TOKEN]

    @property
    def eot_id(self) -> int:
        return self.id_of[EOT_TOKEN]

    @property
    def unk_id(self) -> int:
        return self.id_of[UNK_TOKEN]

    @property
    def pad_id(self) -> int:
        return self.id_of[PAD_TOKEN]

    @property
    def n_specials(self) -> int:
        return len(SPECIAL_TOKENS)

    @property
    def words(self) -> tuple[str, ...]:
        """Non-special entries in id order."""
        return self.word_of[self.n_specials :]

    def is_special(self, token_id: int) -> bool:
        return token_id < self.n_specials

    def encode(self, text: str) -> list[int]:
        """Map normalized words to ids; unknown words become <|unk|>."""
        unk = self.unk_id
        return [self.id_of.get(word, unk) for word in tokenize(text)]

    def decode(self, ids: Iterable[int]) -> str:
        return " ".join(self.word_of[i] for i in ids)

    # ==================== Persistence ====================

    def to_dict(self) -> dict:
        return {
            "specials": {tok: self.id_of[tok] for tok in SPECIAL_TOKENS},
            "words": {word: self.id_of[word] for word in self.words},
        }

    def save(self, path: Path) -> None:
        atomic_write_json(Path(path), self.to_dict())

    @classmethod
    def load(cls, path: Path) -> "Vocab":
        """Load a vocabulary written by ``save``.

        Raises:
            ConfigError: If the file is missing or ids are not contiguous
        """
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"Vocabulary file not found: {path}")
        data = json.loads(path.read_text(encoding="utf-8"))
        entries = {**data.get("specials", {}), **data.get("words", {})}
        ordered = sorted(entries.items(), key=lambda item: item[1])
        if [i for _, i in ordered] != list(range(len(ordered))):
            raise ConfigError(f"Vocabulary ids in {path} are not contiguous from 0")
        return cls(word_of=tuple(word for word, _ in ordered))


def build_vocab(corpus: Iterable[str], min_count: int = 1) -> Vocab:
    """Build a vocabulary from a text corpus.

    Args:
        corpus: Lines of text
        min_count: Minimum occurrences for a word to get its own id

    Returns:
        Vocab with specials first, then words by descending count, ties broken lexicographically
    """
    counts = Counter(word for line in corpus for word in tokenize(line))
    reserved = set(SPECIAL_TOKENS)
    kept = sorted(
        (word for word, n in counts.items() if n >= min_count and word not in reserved),
        key=lambda word: (-counts[word], word),
    )
    logger.debug(f"Vocabulary: {len(kept)} words kept of {len(counts)} types (min_count={min_count})")
    return Vocab(word_of=tuple(SPECIAL_TOKENS) + tuple(kept))
