"""Named-tensor parameter checkpoints.

A checkpoint is a directory:
    manifest.json - model config, vocab size, dtype and one entry per tensor (name, shape, offset)
    params.bin    - every tensor's raw little-endian floats, concatenated in manifest order
"""

import json
import logging
from pathlib import Path

import numpy as np
import torch

from ..core.errors import CheckpointError
from ..core.models import ModelConfig
from ..model.seq2seq import SubtitlePromptedSeq2Seq
from .files import atomic_write_bytes, atomic_write_json

logger = logging.getLogger(__name__)

CHECKPOINT_FORMAT = 1
MANIFEST_NAME = "manifest.json"
PARAMS_NAME = "params.bin"

NUMPY_DTYPES = {"float32": "<f4", "float64": "<f8"}


def save_checkpoint(model: SubtitlePromptedSeq2Seq, directory: Path) -> Path:
    """Write the model's parameters and configuration.

    Args:
        model: Model to persist
        directory: Checkpoint directory (created if needed)

    Returns:
        The checkpoint directory
    """
    directory = Path(directory)
    dtype_name = model.config.dtype
    np_dtype = np.dtype(NUMPY_DTYPES[dtype_name])

    entries = []
    chunks = []
    offset = 0
    for name, tensor in model.state_dict().items():
        array = tensor.detach().cpu().numpy().astype(np_dtype)
        entries.append({"name": name, "shape": list(array.shape), "offset": offset})
        chunks.append(array.tobytes(order="C"))
        offset += array.nbytes

    manifest = {
        "format": CHECKPOINT_FORMAT,
        "dtype": dtype_name,
        "vocab_size": model.vocab_size,
        "seed": model.config.seed,
        "config": model.config.model_dump(),
        "total_bytes": offset,
        "tensors": entries,
    }
    atomic_write_bytes(directory / PARAMS_NAME, b"".join(chunks))
    atomic_write_json(directory / MANIFEST_NAME, manifest)
    logger.debug(f"Saved {len(entries)} tensors ({offset} bytes) to {directory}")
    return directory


def load_checkpoint(directory: Path) -> SubtitlePromptedSeq2Seq:
    """Rebuild a model from a checkpoint directory.

    Raises:
        CheckpointError: If files are missing or tensors disagree with the config
    """
    directory = Path(directory)
    manifest_path = directory / MANIFEST_NAME
    params_path = directory / PARAMS_NAME
    if not manifest_path.exists() or not params_path.exists():
        raise CheckpointError(f"No checkpoint at {directory}")

    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    if manifest.get("format") != CHECKPOINT_FORMAT:
        raise CheckpointError(f"Unsupported checkpoint format {manifest.get('format')!r}")

    config = ModelConfig.model_validate(manifest["config"])
    model = SubtitlePromptedSeq2Seq(config, manifest["vocab_size"])
    np_dtype = np.dtype(NUMPY_DTYPES[manifest["dtype"]])

    data = params_path.read_bytes()
    if len(data) != manifest["total_bytes"]:
        raise CheckpointError(f"{params_path} holds {len(data)} bytes, manifest expects {manifest['total_bytes']}")

    expected = model.state_dict()
    names = [entry["name"] for entry in manifest["tensors"]]
    if sorted(names) != sorted(expected):
        missing = sorted(set(expected) - set(names))
        extra = sorted(set(names) - set(expected))
        raise CheckpointError(f"Tensor names differ from the model (missing {missing}, unexpected {extra})")

    state = {}
    for entry in manifest["tensors"]:
        shape = tuple(entry["shape"])
        if shape != tuple(expected[entry["name"]].shape):
            raise CheckpointError(f"Tensor {entry['name']} has shape {shape}, model expects {tuple(expected[entry['name']].shape)}")
        count = int(np.prod(shape, dtype=np.int64))
        array = np.frombuffer(data, dtype=np_dtype, count=count, offset=entry["offset"]).reshape(shape)
        state[entry["name"]] = torch.from_numpy(array.astype(array.dtype.newbyteorder("="))).to(model.dtype)
    model.load_state_dict(state)
    return model
