"""
Sinusoidal positional encoding and the scene-to-unit-box scaling in front of it.
"""

from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from src.constants import SCENE_BOUND

Domain = Literal["position", "direction", "projection"]


class EncodingConfig(BaseModel):
    """Encoding hyperparameters for field and projection inputs."""

    model_config = ConfigDict(extra="forbid")

    levels_position: int = Field(default=10, ge=1, description="Frequencies for field positions")
    levels_direction: int = Field(default=4, ge=1, description="Frequencies for view directions")
    levels_projection: int = Field(
        default=6, ge=1, description="Frequencies for projection-module inputs"
    )
    include_input: bool = Field(default=True, description="Prepend the raw input")
    scene_bound: float = Field(
        default=SCENE_BOUND, gt=0, description="Half-extent of the scene box in world units"
    )

    def levels(self, domain: Domain) -> int:
        if domain == "direction":
            return self.levels_direction
        if domain == "projection":
            return self.levels_projection
        return self.levels_position

    def encoded_length(self, d: int, domain: Domain) -> int:
        return encoded_length(d, self.levels(domain), self.include_input)


def encoded_length(d: int, levels: int, include_input: bool) -> int:
    return d * 2 * levels + (d if include_input else 0)


def _frequencies(levels: int, dtype: np.dtype) -> np.ndarray:
    return (np.pi * 2.0 ** np.arange(levels)).astype(dtype)


def positional_encode(p: np.ndarray, cfg: EncodingConfig, domain: Domain) -> np.ndarray:
    """Encode ``p`` (``(d,)`` or ``(N, d)``) already scaled into the unit box.

    Layout: ``[p] + [sin(2^k·π·p), cos(2^k·π·p)] for k = 0..levels-1``.
    """
    freqs = _frequencies(cfg.levels(domain), p.dtype)
    arg = p[..., None, :] * freqs[:, None]
    periodic = np.stack([np.sin(arg), np.cos(arg)], axis=-2)
    periodic = periodic.reshape(*p.shape[:-1], -1)
    if cfg.include_input:
        return np.concatenate([p, periodic], axis=-1)
    return periodic


def positional_encode_backward(
    p: np.ndarray, cfg: EncodingConfig, domain: Domain, d_feat: np.ndarray
) -> np.ndarray:
    d = p.shape[-1]
    levels = cfg.levels(domain)
    freqs = _frequencies(levels, p.dtype)
    arg = p[..., None, :] * freqs[:, None]
    offset = d if cfg.include_input else 0
    d_periodic = d_feat[..., offset:].reshape(*p.shape[:-1], levels, 2, d)
    dp = (
        d_periodic[..., 0, :] * np.cos(arg) - d_periodic[..., 1, :] * np.sin(arg)
    ) * freqs[:, None]
    dp = dp.sum(axis=-2)
    if cfg.include_input:
        dp = dp + d_feat[..., :d]
    return dp


def to_unit_box(x: np.ndarray, cfg: EncodingConfig) -> np.ndarray:
    """Scale world coordinates so the scene box maps to [-1, 1]³, clamping outside."""
    return np.clip(x / cfg.scene_bound, -1.0, 1.0).astype(x.dtype, copy=False)


def to_unit_box_backward(x: np.ndarray, cfg: EncodingConfig, dq: np.ndarray) -> np.ndarray:
    q = x / cfg.scene_bound
    inside = (q > -1.0) & (q < 1.0)
    return dq * inside / cfg.scene_bound
