"""Manifests, feature sidecars and parameter checkpoints on disk.

``checkpoint_storage`` depends on the model package and is imported directly.
"""

from .files import atomic_write_bytes, atomic_write_json, atomic_write_text
from .manifest_storage import (
    TrainingUtterance,
    Utterance,
    load_manifest,
    read_feature_file,
    write_feature_file,
    write_manifest,
)

__all__ = [
    "atomic_write_bytes",
    "atomic_write_json",
    "atomic_write_text",
    "Utterance",
    "TrainingUtterance",
    "load_manifest",
    "write_manifest",
    "read_feature_file",
    "write_feature_file",
]
