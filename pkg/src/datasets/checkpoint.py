"""
Checkpoint files: a one-line JSON header, a blank line, then little-endian
float32 tensors concatenated in header order.
"""

import logging
from math import prod
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import BaseModel, Field, ValidationError

from src.constants import CHECKPOINT_FORMAT_VERSION
from src.diffcore.params import ParamSet, ParamTensor
from src.errors import CheckpointError

logger = logging.getLogger("knerf-checkpoint")

HEADER_END = b"\n\n"
PAYLOAD_DTYPE = np.dtype("<f4")


class TensorEntry(BaseModel):
    name: str
    shape: list[int]


class CheckpointHeader(BaseModel):
    format_version: int
    tensors: list[TensorEntry]
    hyperparameters: dict[str, Any] = Field(default_factory=dict)


def save_checkpoint(
    params: ParamSet, path: Path, hyperparameters: dict[str, Any] | None = None
) -> None:
    try:
        tensors = [
            ParamTensor.from_array(name, np.asarray(value, dtype=PAYLOAD_DTYPE))
            for name, value in params.items()
        ]
    except ValueError as e:
        raise CheckpointError(f"Cannot serialize parameters: {e!s}") from e
    header = CheckpointHeader(
        format_version=CHECKPOINT_FORMAT_VERSION,
        tensors=[TensorEntry(name=t.name, shape=t.shape) for t in tensors],
        hyperparameters=hyperparameters or {},
    )
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "wb") as f:
        f.write(header.model_dump_json().encode())
        f.write(HEADER_END)
        for tensor in tensors:
            f.write(tensor.data.tobytes())
    tmp.replace(path)
    logger.debug(f"Saved {len(params)} tensors to {path}")


def read_header(path: Path) -> tuple[CheckpointHeader, bytes]:
    try:
        raw = Path(path).read_bytes()
    except FileNotFoundError as e:
        raise CheckpointError(f"Checkpoint not found: {path}") from e
    head, sep, payload = raw.partition(HEADER_END)
    if not sep:
        raise CheckpointError(f"Checkpoint {path} has no header terminator")
    try:
        header = CheckpointHeader.model_validate_json(head)
    except ValidationError as e:
        raise CheckpointError(f"Malformed checkpoint header in {path}: {e!s}") from e
    if header.format_version != CHECKPOINT_FORMAT_VERSION:
        raise CheckpointError(
            f"Unsupported checkpoint version {header.format_version} in {path}; "
            f"expected {CHECKPOINT_FORMAT_VERSION}"
        )
    return header, payload


def load_checkpoint(path: Path) -> tuple[ParamSet, dict[str, Any]]:
    """Return the tensors (float32, header order) and the hyperparameters."""
    header, payload = read_header(path)
    params: ParamSet = {}
    offset = 0
    for entry in header.tensors:
        if any(d <= 0 for d in entry.shape):
            raise CheckpointError(f"Tensor {entry.name} declares invalid shape {entry.shape}")
        nbytes = prod(entry.shape) * PAYLOAD_DTYPE.itemsize
        if offset + nbytes > len(payload):
            raise CheckpointError(
                f"Checkpoint {path} truncated in tensor {entry.name}: needs {nbytes} bytes, "
                f"{len(payload) - offset} left"
            )
        chunk = np.frombuffer(payload, dtype=PAYLOAD_DTYPE, count=prod(entry.shape), offset=offset)
        tensor = ParamTensor(name=entry.name, shape=entry.shape, data=chunk.astype(np.float32))
        params[tensor.name] = tensor.to_array()
        offset += nbytes
    if offset != len(payload):
        raise CheckpointError(
            f"Checkpoint {path} payload has {len(payload)} bytes, header declares {offset}"
        )
    return params, header.hyperparameters
