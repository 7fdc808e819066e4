"""
Composition F_Θ ∘ F_P. The view direction passes through unprojected.
"""

from dataclasses import dataclass

import numpy as np

from src.diffcore.params import ParamSet
from src.fields.encoding import EncodingConfig
from src.fields.projection import (
    ProjectionCache,
    ProjectionParams,
    projection_backward,
    projection_forward,
)
from src.fields.radiance import FieldCache, RadianceFieldParams, field_backward, field_forward


@dataclass
class ComposedCache:
    field: FieldCache
    projection: ProjectionCache | None


def composed_forward(
    proj: ProjectionParams | None,
    field: RadianceFieldParams,
    x1: np.ndarray,
    d: np.ndarray,
    cfg: EncodingConfig,
) -> tuple[np.ndarray, np.ndarray, ComposedCache]:
    pcache = None
    x0 = x1
    if proj is not None:
        x0, pcache = projection_forward(proj, x1, cfg)
    rgb, sigma, fcache = field_forward(field, x0, d, cfg)
    return rgb, sigma, ComposedCache(field=fcache, projection=pcache)


def composed_backward(
    proj: ProjectionParams | None,
    field: RadianceFieldParams,
    cache: ComposedCache,
    d_rgb: np.ndarray,
    d_sigma: np.ndarray,
    cfg: EncodingConfig,
    field_grads: ParamSet | None,
    proj_grads: ParamSet | None,
) -> None:
    """Accumulate gradients; a ``None`` store marks that network as frozen."""
    need_x0 = proj is not None and proj_grads is not None
    d_x0 = field_backward(
        field, cache.field, d_rgb, d_sigma, cfg, grads=field_grads, want_input_grad=need_x0
    )
    if need_x0:
        assert proj is not None and proj_grads is not None and cache.projection is not None
        assert d_x0 is not None
        projection_backward(proj, cache.projection, d_x0, proj_grads)


def composed_eval(
    proj: ProjectionParams | None,
    field: RadianceFieldParams,
    x1: np.ndarray,
    d: np.ndarray,
    cfg: EncodingConfig,
) -> tuple[np.ndarray, np.ndarray]:
    single = x1.ndim == 1
    rgb, sigma, _ = composed_forward(proj, field, np.atleast_2d(x1), np.atleast_2d(d), cfg)
    if single:
        return rgb[0], sigma[0]
    return rgb, sigma
