"""
Projection module F_P: deformed-space point -> canonical-space point.

Four affine layers over the encoded input. The second layer is residual
(``h2 = relu(A1 h1) + h1``) and so is the output (``x0 = x1 + A3 h3``); with
the last layer zeroed the module is exactly the identity map.
"""

from dataclasses import dataclass

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.diffcore.layers import act_backward, act_forward, affine_forward, init_affine
from src.diffcore.params import ParamSet, cast
from src.fields.encoding import EncodingConfig, positional_encode, to_unit_box
from src.fields.radiance import Precision

N_LAYERS = 4


class ProjectionArch(BaseModel):
    """Projection-module network shape."""

    model_config = ConfigDict(extra="forbid")

    width: int = Field(default=64, ge=1, description="Hidden width")


class ProjectionParams(BaseModel):
    """Weights of the projection module."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    arch: ProjectionArch
    in_dim: int = Field(description="Encoded input length")
    tensors: dict[str, np.ndarray]

    @model_validator(mode="after")
    def _check_shapes(self) -> "ProjectionParams":
        expected = projection_shapes(self.arch, self.in_dim)
        if list(expected) != list(self.tensors):
            raise ValueError(
                f"Projection tensors {list(self.tensors)} != expected {list(expected)}"
            )
        for name, shape in expected.items():
            if self.tensors[name].shape != shape:
                raise ValueError(
                    f"Projection tensor {name} has shape {self.tensors[name].shape}, "
                    f"expected {shape}"
                )
        return self

    def astype(self, dtype: type) -> "ProjectionParams":
        return self.model_copy(update={"tensors": cast(self.tensors, dtype)})


def projection_shapes(arch: ProjectionArch, in_dim: int) -> dict[str, tuple[int, ...]]:
    dims = [in_dim, arch.width, arch.width, arch.width, 3]
    shapes: dict[str, tuple[int, ...]] = {}
    for i in range(N_LAYERS):
        shapes[f"layer.{i}.W"] = (dims[i + 1], dims[i])
        shapes[f"layer.{i}.b"] = (dims[i + 1],)
    return shapes


def init_projection_identity(
    arch: ProjectionArch, cfg: EncodingConfig, seed: int, precision: Precision = "float32"
) -> ProjectionParams:
    """Random hidden layers, zero output layer: ``project(x) == x`` exactly."""
    rng = np.random.default_rng(seed)
    dtype = np.dtype(precision).type
    in_dim = cfg.encoded_length(3, "projection")
    tensors: ParamSet = {}
    for name, shape in projection_shapes(arch, in_dim).items():
        if name.endswith(".W"):
            W, b = init_affine(rng, shape[1], shape[0], dtype)
            tensors[name] = W
            tensors[name[:-2] + ".b"] = b
    last = N_LAYERS - 1
    tensors[f"layer.{last}.W"] = np.zeros_like(tensors[f"layer.{last}.W"])
    tensors[f"layer.{last}.b"] = np.zeros_like(tensors[f"layer.{last}.b"])
    return ProjectionParams(arch=arch, in_dim=in_dim, tensors=tensors)


@dataclass
class ProjectionCache:
    inputs: list[np.ndarray]
    pre: list[np.ndarray]


def projection_forward(
    params: ProjectionParams, x1: np.ndarray, cfg: EncodingConfig
) -> tuple[np.ndarray, ProjectionCache]:
    t = params.tensors
    e = positional_encode(to_unit_box(x1, cfg), cfg, "projection")

    z0 = affine_forward(e, t["layer.0.W"], t["layer.0.b"])
    h1 = act_forward("relu", z0)
    z1 = affine_forward(h1, t["layer.1.W"], t["layer.1.b"])
    h2 = act_forward("relu", z1) + h1
    z2 = affine_forward(h2, t["layer.2.W"], t["layer.2.b"])
    h3 = act_forward("relu", z2)
    delta = affine_forward(h3, t["layer.3.W"], t["layer.3.b"])

    return x1 + delta, ProjectionCache(inputs=[e, h1, h2, h3], pre=[z0, z1, z2])


def projection_backward(
    params: ProjectionParams, cache: ProjectionCache, d_x0: np.ndarray, grads: ParamSet
) -> None:
    """Accumulate parameter gradients for upstream ``d_x0 (N, 3)``."""
    t = params.tensors
    e, h1, h2, h3 = cache.inputs
    z0, z1, z2 = cache.pre

    def back(i: int, x: np.ndarray, dy: np.ndarray) -> np.ndarray:
        grads[f"layer.{i}.W"] += dy.T @ x
        grads[f"layer.{i}.b"] += dy.sum(axis=0)
        return dy @ t[f"layer.{i}.W"]

    dh3 = back(3, h3, d_x0)
    dh2 = back(2, h2, act_backward("relu", z2, dh3))
    dh1 = back(1, h1, act_backward("relu", z1, dh2)) + dh2
    back(0, e, act_backward("relu", z0, dh1))


def project(params: ProjectionParams, x1: np.ndarray, cfg: EncodingConfig) -> np.ndarray:
    """Map a point ``(3,)`` or a batch ``(N, 3)`` into canonical space."""
    x0, _ = projection_forward(params, np.atleast_2d(x1), cfg)
    return x0[0] if x1.ndim == 1 else x0
