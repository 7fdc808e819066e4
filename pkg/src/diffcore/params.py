"""
Parameter containers shared by every trainable network.

A parameter set is an insertion-ordered ``dict[str, np.ndarray]``; the order
is the serialization order of checkpoints. A gradient store is a parameter
set with identical keys and shapes.
"""

import hashlib
from math import prod

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

ParamSet = dict[str, np.ndarray]


class ParamTensor(BaseModel):
    """A named, flat, row-major tensor as stored in checkpoints."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    name: str = Field(description="Identifier, e.g. 'coarse.trunk.0.W'")
    shape: list[int] = Field(description="Positive dimensions")
    data: np.ndarray = Field(description="Flat array of real scalars")

    @model_validator(mode="after")
    def _check_length(self) -> "ParamTensor":
        if any(d <= 0 for d in self.shape):
            raise ValueError(f"Tensor {self.name} has non-positive dimension in {self.shape}")
        if self.data.ndim != 1 or self.data.size != prod(self.shape):
            raise ValueError(
                f"Tensor {self.name}: data length {self.data.size} != product of {self.shape}"
            )
        return self

    def to_array(self) -> np.ndarray:
        return self.data.reshape(self.shape)

    @classmethod
    def from_array(cls, name: str, array: np.ndarray) -> "ParamTensor":
        return cls(name=name, shape=list(array.shape), data=np.ascontiguousarray(array).ravel())


def zeros_like(params: ParamSet) -> ParamSet:
    """Gradient store congruent with ``params``."""
    return {name: np.zeros_like(value) for name, value in params.items()}


def accumulate(into: ParamSet, grads: ParamSet, scale: float = 1.0) -> None:
    for name, g in grads.items():
        into[name] += g if scale == 1.0 else g * scale


def cast(params: ParamSet, dtype: np.dtype | type) -> ParamSet:
    return {name: value.astype(dtype, copy=True) for name, value in params.items()}


def copy_params(params: ParamSet) -> ParamSet:
    return {name: value.copy() for name, value in params.items()}


def with_prefix(prefix: str, params: ParamSet) -> ParamSet:
    return {f"{prefix}.{name}": value for name, value in params.items()}


def strip_prefix(prefix: str, params: ParamSet) -> ParamSet:
    head = f"{prefix}."
    return {name[len(head) :]: value for name, value in params.items() if name.startswith(head)}


def digest(params: ParamSet) -> str:
    """SHA-256 over names, shapes, dtypes and raw bytes, in key order."""
    h = hashlib.sha256()
    for name, value in params.items():
        h.update(name.encode())
        h.update(str(value.shape).encode())
        h.update(str(value.dtype).encode())
        h.update(np.ascontiguousarray(value).tobytes())
    return h.hexdigest()


def all_finite(params: ParamSet) -> bool:
    return all(bool(np.all(np.isfinite(v))) for v in params.values())
