"""
Versioned binary checkpoint.

Layout (little-endian): magic ``SCCK``, u32 format version, u32 length +
UTF-8 JSON of the ModelConfig, u32 array count, then per array: u32 name
length, name, u32 rows, u32 cols, rows*cols float64 values. Arrays follow
parameter declaration order, then the batch-norm running stats.
"""

import json
import struct
from pathlib import Path
from typing import BinaryIO, Dict

import numpy as np
from loguru import logger

from selfclassifier.core.model import ModelParams, init_params
from selfclassifier.exceptions import CheckpointError
from selfclassifier.schemas.config import ModelConfig

MAGIC = b"SCCK"
FORMAT_VERSION = 1


def _write_u32(fh: BinaryIO, value: int) -> None:
    fh.write(struct.pack("<I", value))


def _read_exact(fh: BinaryIO, size: int) -> bytes:
    data = fh.read(size)
    if len(data) != size:
        raise CheckpointError("checkpoint is truncated")
    return data


def _read_u32(fh: BinaryIO) -> int:
    return struct.unpack("<I", _read_exact(fh, 4))[0]


def _arrays(params: ModelParams) -> Dict[str, np.ndarray]:
    arrays = {name: tensor.data for name, tensor in params}
    for prefix, state in params.bn_states.items():
        arrays[f"{prefix}.bn.running_mean"] = state.running_mean
        arrays[f"{prefix}.bn.running_var"] = state.running_var
    return arrays


def save_checkpoint(params: ModelParams, path: str | Path) -> Path:
    """Write params (and BN running stats) to path, creating parent directories."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    config_bytes = json.dumps(params.config.model_dump(mode="json"), sort_keys=True).encode("utf-8")
    arrays = _arrays(params)

    with open(path, "wb") as fh:
        fh.write(MAGIC)
        _write_u32(fh, FORMAT_VERSION)
        _write_u32(fh, len(config_bytes))
        fh.write(config_bytes)
        _write_u32(fh, len(arrays))
        for name, array in arrays.items():
            encoded = name.encode("utf-8")
            _write_u32(fh, len(encoded))
            fh.write(encoded)
            rows, cols = array.shape
            _write_u32(fh, rows)
            _write_u32(fh, cols)
            fh.write(np.ascontiguousarray(array, dtype="<f8").tobytes())

    logger.info(f"Saved checkpoint with {len(arrays)} arrays to {path}")
    return path


def load_checkpoint(path: str | Path) -> ModelParams:
    """
    Read a checkpoint written by save_checkpoint.

    Raises:
        CheckpointError: On a bad magic, unknown version, truncation or
            arrays that do not match the stored config
    """
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"checkpoint not found: {path}")

    with open(path, "rb") as fh:
        if _read_exact(fh, 4) != MAGIC:
            raise CheckpointError(f"{path} is not a checkpoint (bad magic)")
        version = _read_u32(fh)
        if version != FORMAT_VERSION:
            raise CheckpointError(f"unsupported checkpoint version {version}")
        try:
            config = ModelConfig(**json.loads(_read_exact(fh, _read_u32(fh)).decode("utf-8")))
        except ValueError as e:
            raise CheckpointError(f"checkpoint config is invalid: {e}") from e

        stored: Dict[str, np.ndarray] = {}
        for _ in range(_read_u32(fh)):
            name = _read_exact(fh, _read_u32(fh)).decode("utf-8")
            rows = _read_u32(fh)
            cols = _read_u32(fh)
            data = np.frombuffer(_read_exact(fh, rows * cols * 8), dtype="<f8")
            stored[name] = data.reshape(rows, cols).astype(np.float64)

    # Build the skeleton from the config, then overwrite every array
    params = init_params(config, seed=0)
    expected = _arrays(params)
    if list(stored) != list(expected):
        raise CheckpointError("checkpoint arrays do not match its model config")
    for name, array in stored.items():
        if array.shape != expected[name].shape:
            raise CheckpointError(f"{name}: stored shape {array.shape}, expected {expected[name].shape}")
    for name, tensor in params:
        tensor.data[...] = stored[name]
    for prefix, state in params.bn_states.items():
        state.running_mean = stored[f"{prefix}.bn.running_mean"].copy()
        state.running_var = stored[f"{prefix}.bn.running_var"].copy()
    return params
