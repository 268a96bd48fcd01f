"""Build an utterance manifest from an SRT file and precomputed features.

The features directory holds ``segments.jsonl`` (one object per utterance:
id, start_ms, end_ms, optional pseudo_transcript and reference) and one
``<id>.sbrf`` sidecar per segment.
"""

import json
import logging
from pathlib import Path

from ..core.constants import FEATURE_SUFFIX
from ..core.errors import ManifestError
from ..storage.manifest_storage import Utterance, read_feature_file
from ..subtitles.srt import cues_in_window, parse_srt

logger = logging.getLogger(__name__)

SEGMENTS_FILE_NAME = "segments.jsonl"


def ingest(srt_path: Path, features_dir: Path) -> list[Utterance]:
    """Pair each feature segment with the subtitle text overlapping its window.

    Args:
        srt_path: SubRip file for the whole programme
        features_dir: Directory with segments.jsonl and feature sidecars

    Returns:
        Utterances in segment order

    Raises:
        ManifestError: On malformed segment entries (names the id)
    """
    cues = parse_srt(Path(srt_path).read_text(encoding="utf-8"))
    segments_path = Path(features_dir) / SEGMENTS_FILE_NAME
    if not segments_path.exists():
        raise ManifestError(f"segment list not found: {segments_path}")

    utterances = []
    for line_no, line in enumerate(segments_path.read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            segment = json.loads(line)
            utt_id = segment["id"]
            start_ms, end_ms = int(segment["start_ms"]), int(segment["end_ms"])
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
            raise ManifestError(f"{segments_path}:{line_no}: bad segment entry ({e})") from e
        if end_ms <= start_ms:
            raise ManifestError(f"empty time window [{start_ms}, {end_ms})", utt_id)

        features = read_feature_file(Path(features_dir) / f"{utt_id}{FEATURE_SUFFIX}", utt_id)
        utterances.append(
            Utterance(
                id=utt_id,
                features=features,
                subtitle=cues_in_window(cues, start_ms, end_ms),
                pseudo_transcript=segment.get("pseudo_transcript", ""),
                reference=segment.get("reference"),
                duration_ms=end_ms - start_ms,
            )
        )

    empty = sum(1 for u in utterances if not u.subtitle)
    logger.info(f"Ingested {len(utterances)} utterances from {len(cues)} cues ({empty} without subtitle text)")
    return utterances
