"""Decoder input assembly and the hallucination filter.

Layout:
    <|sop|> prompt* <|sot|> <|lang|> <|transcribe|> <|notimestamps|> target* <|eot|>

Loss is computed on target and <|eot|> positions only.
"""

from collections import Counter
from dataclasses import dataclass
from enum import Enum
from typing import Optional

from ..core.constants import (
    FILTER_MAX_REP_RATIO,
    FILTER_MAX_TOKENS,
    FILTER_MIN_TOKENS_FOR_REPETITION,
    LAYOUT_OVERHEAD,
)
from ..core.errors import ShapeError
from .tokenizer import Vocab, tokenize


class Role(str, Enum):
    """Segment role of a decoder position."""

    PROMPT = "prompt"
    CONTROL = "control"
    TARGET = "target"
    EOT = "eot"


class FilterVerdict(str, Enum):
    KEEP = "keep"
    DROP = "drop"


@dataclass(frozen=True)
class DecoderInput:
    """Token ids with per-position roles and loss mask."""

    ids: tuple[int, ...]
    roles: tuple[Role, ...]
    loss_mask: tuple[bool, ...]

    def __post_init__(self):
        if not len(self.ids) == len(self.roles) == len(self.loss_mask):
            raise ShapeError("ids, roles and loss_mask must have equal length")

    def __len__(self) -> int:
        return len(self.ids)

    @property
    def prompt_length(self) -> int:
        """T_p."""
        return sum(1 for role in self.roles if role is Role.PROMPT)

    @property
    def target_length(self) -> int:
        """T_t."""
        return sum(1 for role in self.roles if role is Role.TARGET)

    @property
    def prefix_length(self) -> int:
        """Positions up to and including <|notimestamps|>."""
        return self.prompt_length + LAYOUT_OVERHEAD - 1

    @property
    def prefix_ids(self) -> tuple[int, ...]:
        return self.ids[: self.prefix_length]

    @property
    def target_ids(self) -> tuple[int, ...]:
        start = self.prefix_length
        return self.ids[start : start + self.target_length]


def assemble_decoder_input(
    vocab: Vocab,
    subtitle: str,
    target: str,
    max_seq: Optional[int] = None,
) -> DecoderInput:
    """Lay out subtitle prompt, control block and target for the decoder.

    Args:
        vocab: Vocabulary
        subtitle: Subtitle text used as the prompt (may be empty)
        target: Transcript to learn (may be empty)
        max_seq: Optional length cap; exceeding it raises instead of truncating

    Returns:
        DecoderInput of length T_p + T_t + 6

    Raises:
        ShapeError: If the sequence is longer than max_seq
    """
    prompt_ids = vocab.encode(subtitle)
    target_ids = vocab.encode(target)
    control = [vocab.sot_id, vocab.lang_id, vocab.transcribe_id, vocab.notimestamps_id]

    ids = [vocab.sop_id, *prompt_ids, *control, *target_ids, vocab.eot_id]
    roles = (
        [Role.CONTROL]
        + [Role.PROMPT] * len(prompt_ids)
        + [Role.CONTROL] * len(control)
        + [Role.TARGET] * len(target_ids)
        + [Role.EOT]
    )
    if max_seq is not None and len(ids) > max_seq:
        raise ShapeError(
            f"Decoder input of length {len(ids)} (prompt {len(prompt_ids)}, target {len(target_ids)}) "
            f"exceeds max_seq={max_seq}"
        )
    loss_mask = [role in (Role.TARGET, Role.EOT) for role in roles]
    return DecoderInput(ids=tuple(ids), roles=tuple(roles), loss_mask=tuple(loss_mask))


def hallucination_filter(
    transcript: str,
    max_tokens: int = FILTER_MAX_TOKENS,
    max_rep_ratio: float = FILTER_MAX_REP_RATIO,
) -> FilterVerdict:
    """Reject over-long or repetition-dominated transcripts.

    Args:
        transcript: Candidate pseudo transcript
        max_tokens: Longest acceptable transcript in words
        max_rep_ratio: Largest acceptable share of the most frequent word
            (checked for transcripts of 5 words or more)

    Returns:
        FilterVerdict.KEEP or FilterVerdict.DROP
    """
    if max_tokens < 1 or not 0 < max_rep_ratio <= 1:
        raise ValueError(f"Invalid filter thresholds: max_tokens={max_tokens}, max_rep_ratio={max_rep_ratio}")

    words = tokenize(transcript)
    if len(words) > max_tokens:
        return FilterVerdict.DROP
    if len(words) >= FILTER_MIN_TOKENS_FOR_REPETITION:
        top_count = Counter(words).most_common(1)[0][1]
        if top_count / len(words) > max_rep_ratio:
            return FilterVerdict.DROP
    return FilterVerdict.KEEP
