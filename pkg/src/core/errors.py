"""Exception hierarchy for the toolkit."""

from typing import Optional, Sequence


class SubrefineError(Exception):
    """Base class for all toolkit errors."""


class SrtParseError(SubrefineError, ValueError):
    """A SubRip block could not be parsed."""

    def __init__(self, message: str, line_no: int):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class SrtValidationError(SubrefineError, ValueError):
    """Parsed cues violate ordering or timing invariants."""


class ManifestError(SubrefineError, ValueError):
    """An utterance manifest entry is invalid."""

    def __init__(self, message: str, utterance_id: Optional[str] = None):
        prefix = f"utterance {utterance_id!r}: " if utterance_id is not None else ""
        super().__init__(f"{prefix}{message}")
        self.utterance_id = utterance_id


class FeatureFileError(ManifestError):
    """A feature sidecar file is missing or corrupt."""


class ShapeError(SubrefineError, ValueError):
    """Tensor dimensions disagree or exceed configured limits."""


class AttentionError(SubrefineError, ValueError):
    """Attention inputs are degenerate (zero-sum rows, fully masked rows)."""


class TrainingError(SubrefineError, RuntimeError):
    """Training diverged."""

    def __init__(self, message: str, batch_index: int, utterance_ids: Sequence[str] = ()):
        ids = ", ".join(utterance_ids)
        super().__init__(f"batch {batch_index} [{ids}]: {message}")
        self.batch_index = batch_index
        self.utterance_ids = list(utterance_ids)


class EvaluationError(SubrefineError, ValueError):
    """Scoring inputs are unusable."""


class ConfigError(SubrefineError, ValueError):
    """Configuration file or values are invalid."""


class CheckpointError(SubrefineError, ValueError):
    """A parameter checkpoint is missing or inconsistent."""
