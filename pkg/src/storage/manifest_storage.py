"""Utterance manifests (JSON Lines) and binary feature sidecars.

Layout on disk:
    <dir>/manifest.jsonl      - one utterance per line
    <dir>/features/<id>.sbrf  - "SBRF" + uint32 N + uint32 d_feat + N*d_feat float32 (little-endian)
"""

import json
import logging
import struct
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from ..core.constants import FEATURE_MAGIC, FEATURE_SUFFIX, MAX_UTTERANCE_MS
from ..core.errors import FeatureFileError, ManifestError
from .files import atomic_write_bytes, atomic_write_text

logger = logging.getLogger(__name__)

HEADER = struct.Struct("<4sII")
FEATURE_DIR_NAME = "features"


@dataclass(frozen=True, eq=False)
class TrainingUtterance:
    """The fields training is allowed to see. Carries no reference."""

    id: str
    features: np.ndarray
    subtitle: str
    pseudo_transcript: str


@dataclass(eq=False)
class Utterance:
    """Audio features plus subtitle, pseudo transcript and optional verbatim reference."""

    id: str
    features: np.ndarray
    subtitle: str
    pseudo_transcript: str
    duration_ms: int
    reference: Optional[str] = None
    feature_file: Optional[str] = field(default=None, repr=False)

    def __post_init__(self):
        self.features = np.ascontiguousarray(self.features, dtype=np.float32)
        if self.features.ndim != 2 or self.features.shape[0] < 1:
            raise ManifestError(f"features must be an N x d matrix with N >= 1, got shape {self.features.shape}", self.id)
        if self.duration_ms > MAX_UTTERANCE_MS:
            raise ManifestError(f"duration {self.duration_ms} ms exceeds {MAX_UTTERANCE_MS} ms", self.id)

    @property
    def n_frames(self) -> int:
        return self.features.shape[0]

    def training_view(self) -> TrainingUtterance:
        """Strip the reference; the only form training code accepts."""
        return TrainingUtterance(
            id=self.id,
            features=self.features,
            subtitle=self.subtitle,
            pseudo_transcript=self.pseudo_transcript,
        )

    def with_pseudo(self, pseudo_transcript: str) -> "Utterance":
        return replace(self, pseudo_transcript=pseudo_transcript)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Utterance):
            return NotImplemented
        return (
            self.id == other.id
            and self.subtitle == other.subtitle
            and self.pseudo_transcript == other.pseudo_transcript
            and self.reference == other.reference
            and self.duration_ms == other.duration_ms
            and self.features.shape == other.features.shape
            # Bit-level comparison
            and self.features.tobytes() == other.features.tobytes()
        )


# ==================== Feature sidecar ====================


def encode_features(matrix: np.ndarray) -> bytes:
    """Serialize an N x d matrix in the sidecar format."""
    matrix = np.asarray(matrix)
    if matrix.ndim != 2:
        raise ValueError(f"Expected a 2-D matrix, got shape {matrix.shape}")
    n, d = matrix.shape
    return HEADER.pack(FEATURE_MAGIC, n, d) + matrix.astype("<f4").tobytes(order="C")


def decode_features(data: bytes, utterance_id: Optional[str] = None) -> np.ndarray:
    """Parse sidecar bytes into a float32 matrix.

    Raises:
        FeatureFileError: On bad magic, truncated/oversized payload or NaN values
    """
    if len(data) < HEADER.size:
        raise FeatureFileError("feature file shorter than its header", utterance_id)
    magic, n, d = HEADER.unpack_from(data)
    if magic != FEATURE_MAGIC:
        raise FeatureFileError(f"bad magic {magic!r}", utterance_id)

    payload = len(data) - HEADER.size
    expected = n * d * 4
    if payload != expected:
        rows = payload / (d * 4) if d else 0
        raise FeatureFileError(
            f"header declares N={n}, d_feat={d} ({expected} bytes) but file holds {payload} bytes "
            f"({rows:g} rows)",
            utterance_id,
        )

    matrix = np.frombuffer(data, dtype="<f4", offset=HEADER.size).reshape(n, d).astype(np.float32)
    if np.isnan(matrix).any():
        raise FeatureFileError("features contain NaN", utterance_id)
    return matrix


def write_feature_file(path: Path, matrix: np.ndarray) -> None:
    """Write a matrix (features or attention rows) as a sidecar file."""
    atomic_write_bytes(path, encode_features(matrix))


def read_feature_file(path: Path, utterance_id: Optional[str] = None) -> np.ndarray:
    """Read a sidecar file.

    Raises:
        FeatureFileError: If the file is missing or corrupt
    """
    if not path.exists():
        raise FeatureFileError(f"feature file not found: {path}", utterance_id)
    return decode_features(path.read_bytes(), utterance_id)


# ==================== Manifest ====================


def _record(utt: Utterance, feature_file: str) -> dict:
    record = {
        "id": utt.id,
        "subtitle": utt.subtitle,
        "pseudo_transcript": utt.pseudo_transcript,
    }
    if utt.reference is not None:
        record["reference"] = utt.reference
    record["duration_ms"] = utt.duration_ms
    record["feature_file"] = feature_file
    return record


def write_manifest(utterances: Iterable[Utterance], path: Path) -> None:
    """Write utterances as JSON Lines plus one feature sidecar each.

    Sidecars go to ``<manifest dir>/features/<id>.sbrf``; the manifest stores
    paths relative to its own directory.

    Args:
        utterances: Utterances to persist
        path: Manifest path
    """
    path = Path(path)
    feature_dir = path.parent / FEATURE_DIR_NAME
    lines = []
    seen: set[str] = set()
    for utt in utterances:
        if utt.id in seen:
            raise ManifestError("duplicate utterance id", utt.id)
        seen.add(utt.id)
        feature_path = feature_dir / f"{utt.id}{FEATURE_SUFFIX}"
        write_feature_file(feature_path, utt.features)
        relative = feature_path.relative_to(path.parent).as_posix()
        lines.append(json.dumps(_record(utt, relative), ensure_ascii=False))

    atomic_write_text(path, "".join(line + "\n" for line in lines))
    logger.debug(f"Wrote {len(lines)} utterances to {path}")


def load_manifest(path: Path) -> list[Utterance]:
    """Load a JSON Lines manifest and its feature sidecars.

    Args:
        path: Manifest path

    Returns:
        Utterances in file order

    Raises:
        ManifestError: On malformed lines, missing fields or invalid values
        FeatureFileError: On missing/corrupt sidecars (names the utterance id)
    """
    path = Path(path)
    if not path.exists():
        raise ManifestError(f"manifest not found: {path}")

    utterances = []
    with path.open("r", encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, 1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as e:
                raise ManifestError(f"{path}:{line_no}: invalid JSON ({e})") from e

            utt_id = record.get("id")
            missing = [k for k in ("id", "subtitle", "pseudo_transcript", "duration_ms", "feature_file") if k not in record]
            if missing:
                raise ManifestError(f"missing fields {missing}", utt_id)

            feature_file = record["feature_file"]
            features = read_feature_file(path.parent / feature_file, utt_id)
            utterances.append(
                Utterance(
                    id=utt_id,
                    features=features,
                    subtitle=record["subtitle"],
                    pseudo_transcript=record["pseudo_transcript"],
                    reference=record.get("reference"),
                    duration_ms=int(record["duration_ms"]),
                    feature_file=feature_file,
                )
            )
    return utterances
