"""SubRip (SRT) parsing, rendering and utterance windowing.

Format handled:

    index [int]
    HH:MM:SS,mmm --> HH:MM:SS,mmm
    text line(s)
    [blank line]
"""

import logging
import re
from dataclasses import dataclass

from ..core.errors import SrtParseError, SrtValidationError

logger = logging.getLogger(__name__)

# SubRip styling tags and {\...} overrides; other angle-bracket text is kept
RE_TAGS = re.compile(r"</?[bisu]>|</?font\b[^>]*>|\{\\[^}]*\}", re.IGNORECASE)

RE_TIMING = re.compile(
    r"^(\d{2,}):([0-5]\d):([0-5]\d),(\d{3})\s+-->\s+(\d{2,}):([0-5]\d):([0-5]\d),(\d{3})$"
)


@dataclass(frozen=True)
class SubtitleCue:
    """One timed caption."""

    index: int
    start_ms: int
    end_ms: int
    text: str

    def overlaps(self, start_ms: int, end_ms: int) -> bool:
        """True if the cue shares a nonzero span with [start_ms, end_ms)."""
        return self.start_ms < end_ms and self.end_ms > start_ms


def format_timestamp(ms: int) -> str:
    """Format milliseconds as an SRT timestamp (HH:MM:SS,mmm)."""
    if ms < 0:
        raise SrtValidationError(f"Negative timestamp: {ms}")
    hours, rest = divmod(ms, 3_600_000)
    minutes, rest = divmod(rest, 60_000)
    seconds, millis = divmod(rest, 1000)
    return f"{hours:02d}:{minutes:02d}:{seconds:02d},{millis:03d}"


def _timing_to_ms(h: str, m: str, s: str, ms: str) -> int:
    return int(h) * 3_600_000 + int(m) * 60_000 + int(s) * 1000 + int(ms)


def clean_cue_text(lines: list[str]) -> str:
    """Strip markup and join cue lines with single spaces."""
    cleaned = (RE_TAGS.sub("", line) for line in lines)
    return " ".join(" ".join(cleaned).split())


def _build_cue(block: list[tuple[int, str]]) -> SubtitleCue | None:
    """Build a cue from a block of (line number, line) pairs."""
    index_no, index_line = block[0]
    if not index_line.strip().isdigit():
        raise SrtParseError(f"expected cue index, got {index_line!r}", index_no)
    if len(block) < 2:
        raise SrtParseError("cue has no timing line", index_no)

    timing_no, timing_line = block[1]
    match = RE_TIMING.match(timing_line.strip())
    if match is None:
        raise SrtParseError(f"malformed timing line {timing_line!r}", timing_no)
    if len(block) < 3:
        raise SrtParseError("cue has no text", timing_no)

    groups = match.groups()
    start_ms = _timing_to_ms(*groups[:4])
    end_ms = _timing_to_ms(*groups[4:])
    text = clean_cue_text([line for _, line in block[2:]])
    if not text:
        # Block was markup only
        logger.warning(f"Skipping cue {index_line.strip()} at line {index_no}: empty after tag removal")
        return None
    return SubtitleCue(index=int(index_line), start_ms=start_ms, end_ms=end_ms, text=text)


def validate_cues(cues: list[SubtitleCue]) -> None:
    """Check per-cue and ordering invariants.

    Overlapping cues are accepted as long as start times are ordered.

    Raises:
        SrtValidationError: On the first violated invariant
    """
    previous = None
    for cue in cues:
        if cue.index < 1:
            raise SrtValidationError(f"Cue index must be positive, got {cue.index}")
        if cue.start_ms < 0:
            raise SrtValidationError(f"Cue {cue.index} starts before zero")
        if cue.end_ms <= cue.start_ms:
            raise SrtValidationError(
                f"Cue {cue.index} ends at {cue.end_ms} ms, not after its start {cue.start_ms} ms"
            )
        if not cue.text or cue.text != " ".join(cue.text.split()):
            raise SrtValidationError(f"Cue {cue.index} text must be non-empty single-spaced text")
        if previous is not None:
            if cue.index <= previous.index:
                raise SrtValidationError(
                    f"Cue index {cue.index} does not increase after {previous.index}"
                )
            if cue.start_ms < previous.start_ms:
                raise SrtValidationError(
                    f"Cue {cue.index} starts before cue {previous.index} (out of order)"
                )
        previous = cue


def parse_srt(text: str) -> list[SubtitleCue]:
    """Parse SubRip text into cues.

    Args:
        text: SRT file content

    Returns:
        Cues in file order

    Raises:
        SrtParseError: If a block is malformed (names the line number)
        SrtValidationError: If cues are out of order or have inverted timings
    """
    text = text.lstrip("\ufeff")
    cues: list[SubtitleCue] = []
    block: list[tuple[int, str]] = []

    for line_no, line in enumerate(text.splitlines(), 1):
        if line.strip():
            block.append((line_no, line.rstrip()))
            continue
        if block:
            cue = _build_cue(block)
            if cue is not None:
                cues.append(cue)
            block = []
    if block:
        cue = _build_cue(block)
        if cue is not None:
            cues.append(cue)

    validate_cues(cues)
    return cues


def render_srt(cues: list[SubtitleCue]) -> str:
    """Render cues in canonical SubRip form.

    Each cue becomes one block terminated by a blank line.

    Raises:
        SrtValidationError: If the cues violate the cue invariants
    """
    validate_cues(cues)
    return "".join(
        f"{cue.index}\n{format_timestamp(cue.start_ms)} --> {format_timestamp(cue.end_ms)}\n{cue.text}\n\n"
        for cue in cues
    )


def cues_in_window(cues: list[SubtitleCue], start_ms: int, end_ms: int) -> str:
    """Collect the text of every cue overlapping a time window.

    Args:
        cues: Cues sorted by start time
        start_ms: Window start (inclusive)
        end_ms: Window end (exclusive)

    Returns:
        Space-joined cue texts in time order, or "" when nothing overlaps
    """
    if start_ms >= end_ms:
        raise ValueError(f"Empty window [{start_ms}, {end_ms})")
    ordered = sorted(cues, key=lambda c: (c.start_ms, c.index))
    return " ".join(cue.text for cue in ordered if cue.overlaps(start_ms, end_ms))
