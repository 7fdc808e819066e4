"""
Radiance field F_Θ: position + view direction -> (rgb, sigma).

Layout: an 8-layer ReLU trunk over the encoded position with the encoded
position concatenated again into layer ``skip``; a ReLU density head on the
trunk output; a colour branch that takes a linear feature of the trunk plus
the encoded direction through one ReLU layer and a sigmoid output.
"""

from dataclasses import dataclass
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.diffcore.layers import act_backward, act_forward, affine_forward, init_affine
from src.diffcore.params import ParamSet, cast
from src.errors import ContractViolation
from src.fields.encoding import (
    EncodingConfig,
    positional_encode,
    positional_encode_backward,
    to_unit_box,
    to_unit_box_backward,
)

Precision = Literal["float32", "float64"]


class FieldArch(BaseModel):
    """Radiance-field network shape."""

    model_config = ConfigDict(extra="forbid")

    depth: int = Field(default=8, ge=1, description="Trunk layers")
    width: int = Field(default=128, ge=1, description="Trunk width")
    skip: int = Field(
        default=5, ge=0, description="Trunk layer whose input re-concatenates the encoded position"
    )
    view_width: int = Field(
        default=64, ge=1, description="Width of the direction-conditioned layer"
    )


class RadianceFieldParams(BaseModel):
    """Weights of one radiance-field network."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    arch: FieldArch
    pos_dim: int = Field(description="Encoded position length")
    dir_dim: int = Field(description="Encoded direction length")
    tensors: dict[str, np.ndarray]

    @model_validator(mode="after")
    def _check_shapes(self) -> "RadianceFieldParams":
        expected = field_shapes(self.arch, self.pos_dim, self.dir_dim)
        if list(expected) != list(self.tensors):
            raise ValueError(f"Field tensors {list(self.tensors)} != expected {list(expected)}")
        for name, shape in expected.items():
            if self.tensors[name].shape != shape:
                raise ValueError(
                    f"Field tensor {name} has shape {self.tensors[name].shape}, expected {shape}"
                )
        return self

    @property
    def dtype(self) -> np.dtype:
        return self.tensors["sigma.W"].dtype

    def astype(self, dtype: type) -> "RadianceFieldParams":
        return self.model_copy(update={"tensors": cast(self.tensors, dtype)})


def field_shapes(arch: FieldArch, pos_dim: int, dir_dim: int) -> dict[str, tuple[int, ...]]:
    shapes: dict[str, tuple[int, ...]] = {}
    for i in range(arch.depth):
        if i == 0:
            fan_in = pos_dim
        elif i == arch.skip:
            fan_in = arch.width + pos_dim
        else:
            fan_in = arch.width
        shapes[f"trunk.{i}.W"] = (arch.width, fan_in)
        shapes[f"trunk.{i}.b"] = (arch.width,)
    shapes["sigma.W"] = (1, arch.width)
    shapes["sigma.b"] = (1,)
    shapes["feature.W"] = (arch.width, arch.width)
    shapes["feature.b"] = (arch.width,)
    shapes["view.W"] = (arch.view_width, arch.width + dir_dim)
    shapes["view.b"] = (arch.view_width,)
    shapes["rgb.W"] = (3, arch.view_width)
    shapes["rgb.b"] = (3,)
    return shapes


def init_radiance_field(
    arch: FieldArch, cfg: EncodingConfig, seed: int, precision: Precision = "float32"
) -> RadianceFieldParams:
    rng = np.random.default_rng(seed)
    dtype = np.dtype(precision).type
    pos_dim = cfg.encoded_length(3, "position")
    dir_dim = cfg.encoded_length(3, "direction")
    tensors: ParamSet = {}
    for name, shape in field_shapes(arch, pos_dim, dir_dim).items():
        if name.endswith(".W"):
            W, b = init_affine(rng, shape[1], shape[0], dtype)
            tensors[name] = W
            tensors[name[:-2] + ".b"] = b
    return RadianceFieldParams(arch=arch, pos_dim=pos_dim, dir_dim=dir_dim, tensors=tensors)


@dataclass
class FieldCache:
    x: np.ndarray
    enc_pos: np.ndarray
    q: np.ndarray
    trunk_inputs: list[np.ndarray]
    trunk_pre: list[np.ndarray]
    trunk_out: np.ndarray
    sigma_pre: np.ndarray
    view_in: np.ndarray
    view_pre: np.ndarray
    view_out: np.ndarray
    rgb_pre: np.ndarray


def field_forward(
    params: RadianceFieldParams, x: np.ndarray, d: np.ndarray, cfg: EncodingConfig
) -> tuple[np.ndarray, np.ndarray, FieldCache]:
    """Evaluate the field on ``(N, 3)`` positions and directions.

    Returns:
        rgb ``(N, 3)`` in [0, 1], sigma ``(N,)`` >= 0, and the backward cache
    """
    t = params.tensors
    arch = params.arch
    q = to_unit_box(x, cfg)
    enc_pos = positional_encode(q, cfg, "position")
    enc_dir = positional_encode(d, cfg, "direction")
    if enc_pos.shape[-1] != params.pos_dim or enc_dir.shape[-1] != params.dir_dim:
        raise ContractViolation(
            f"Encoding lengths ({enc_pos.shape[-1]}, {enc_dir.shape[-1]}) do not match field "
            f"inputs ({params.pos_dim}, {params.dir_dim})"
        )

    h = enc_pos
    trunk_inputs: list[np.ndarray] = []
    trunk_pre: list[np.ndarray] = []
    for i in range(arch.depth):
        if i == arch.skip and i > 0:
            h = np.concatenate([enc_pos, h], axis=-1)
        trunk_inputs.append(h)
        z = affine_forward(h, t[f"trunk.{i}.W"], t[f"trunk.{i}.b"])
        trunk_pre.append(z)
        h = act_forward("relu", z)

    sigma_pre = affine_forward(h, t["sigma.W"], t["sigma.b"])
    sigma = act_forward("relu", sigma_pre)[..., 0]

    feature = affine_forward(h, t["feature.W"], t["feature.b"])
    view_in = np.concatenate([feature, enc_dir], axis=-1)
    view_pre = affine_forward(view_in, t["view.W"], t["view.b"])
    view_out = act_forward("relu", view_pre)
    rgb_pre = affine_forward(view_out, t["rgb.W"], t["rgb.b"])
    rgb = act_forward("sigmoid", rgb_pre)

    cache = FieldCache(
        x=x,
        enc_pos=enc_pos,
        q=q,
        trunk_inputs=trunk_inputs,
        trunk_pre=trunk_pre,
        trunk_out=h,
        sigma_pre=sigma_pre,
        view_in=view_in,
        view_pre=view_pre,
        view_out=view_out,
        rgb_pre=rgb_pre,
    )
    return rgb, sigma, cache


def _back(
    x: np.ndarray, W: np.ndarray, dy: np.ndarray, grads: ParamSet | None, prefix: str
) -> np.ndarray:
    if grads is not None:
        grads[f"{prefix}.W"] += dy.T @ x
        grads[f"{prefix}.b"] += dy.sum(axis=0)
    return dy @ W


def field_backward(
    params: RadianceFieldParams,
    cache: FieldCache,
    d_rgb: np.ndarray,
    d_sigma: np.ndarray,
    cfg: EncodingConfig,
    grads: ParamSet | None = None,
    want_input_grad: bool = False,
) -> np.ndarray | None:
    """Backpropagate ``d_rgb (N, 3)`` and ``d_sigma (N,)``.

    Parameter gradients are accumulated into ``grads`` when given (a frozen
    field passes ``None``). Returns d/dx when ``want_input_grad``.
    """
    t = params.tensors
    arch = params.arch

    d_rgb_pre = act_backward("sigmoid", cache.rgb_pre, d_rgb)
    d_view_out = _back(cache.view_out, t["rgb.W"], d_rgb_pre, grads, "rgb")
    d_view_pre = act_backward("relu", cache.view_pre, d_view_out)
    d_view_in = _back(cache.view_in, t["view.W"], d_view_pre, grads, "view")
    d_feature = d_view_in[..., : arch.width]
    dh = _back(cache.trunk_out, t["feature.W"], d_feature, grads, "feature")

    d_sigma_pre = act_backward("relu", cache.sigma_pre, d_sigma[..., None])
    dh = dh + _back(cache.trunk_out, t["sigma.W"], d_sigma_pre, grads, "sigma")

    d_enc = np.zeros_like(cache.enc_pos) if want_input_grad else None
    for i in reversed(range(arch.depth)):
        W = t[f"trunk.{i}.W"]
        dz = act_backward("relu", cache.trunk_pre[i], dh)
        if grads is not None:
            grads[f"trunk.{i}.W"] += dz.T @ cache.trunk_inputs[i]
            grads[f"trunk.{i}.b"] += dz.sum(axis=0)
        if i == 0:
            if d_enc is not None:
                d_enc += dz @ W
            break
        dh_in = dz @ W
        if i == arch.skip:
            if d_enc is not None:
                d_enc += dh_in[..., : params.pos_dim]
            dh = dh_in[..., params.pos_dim :]
        else:
            dh = dh_in

    if not want_input_grad:
        return None
    assert d_enc is not None
    dq = positional_encode_backward(cache.q, cfg, "position", d_enc)
    return to_unit_box_backward(cache.x, cfg, dq)


def field_eval(
    params: RadianceFieldParams, x: np.ndarray, d: np.ndarray, cfg: EncodingConfig
) -> tuple[np.ndarray, np.ndarray]:
    """Evaluate for a single point (``(3,)``) or a batch (``(N, 3)``)."""
    single = x.ndim == 1
    rgb, sigma, _ = field_forward(params, np.atleast_2d(x), np.atleast_2d(d), cfg)
    if single:
        return rgb[0], sigma[0]
    return rgb, sigma
