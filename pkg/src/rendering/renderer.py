"""
Coarse-to-fine ray rendering through (optionally projected) radiance fields.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from src.constants import CHUNK_RAYS, FAR, NEAR, THREADS
from src.datasets.images import ImageBuffer
from src.diffcore.params import ParamSet
from src.fields.composed import ComposedCache, composed_backward, composed_forward
from src.fields.encoding import EncodingConfig
from src.fields.projection import ProjectionParams
from src.fields.radiance import RadianceFieldParams
from src.rendering.camera import Camera, Rays, camera_rays
from src.rendering.compositing import CompositeCache, composite, composite_backward
from src.rendering.sampling import (
    bin_edges,
    merge_samples,
    sample_deltas,
    sample_importance,
    sample_stratified,
)

logger = logging.getLogger("knerf-rendering")


class RenderOptions(BaseModel):
    model_config = ConfigDict(extra="forbid")

    n_coarse: int = Field(default=64, ge=2, description="Stratified samples per ray")
    n_fine: int = Field(default=128, ge=0, description="Importance samples per ray")
    white_background: bool = Field(default=True, description="Composite over white")
    jitter: bool = Field(default=True, description="Perturb samples inside their strata")


class FieldSet(BaseModel):
    """Coarse and fine radiance fields plus the optional projection module."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    coarse: RadianceFieldParams
    fine: RadianceFieldParams
    projection: ProjectionParams | None = None
    encoding: EncodingConfig = Field(default_factory=EncodingConfig)

    def groups(self) -> dict[str, ParamSet]:
        groups = {"coarse": self.coarse.tensors, "fine": self.fine.tensors}
        if self.projection is not None:
            groups["projection"] = self.projection.tensors
        return groups

    def astype(self, dtype: type) -> "FieldSet":
        return self.model_copy(
            update={
                "coarse": self.coarse.astype(dtype),
                "fine": self.fine.astype(dtype),
                "projection": None if self.projection is None else self.projection.astype(dtype),
            }
        )


@dataclass
class _PassCache:
    composed: ComposedCache
    composite: CompositeCache
    n_rays: int
    n_samples: int


@dataclass
class RenderResult:
    coarse_color: np.ndarray
    fine_color: np.ndarray
    coarse_weights: np.ndarray
    fine_weights: np.ndarray
    fine_t: np.ndarray
    depth: np.ndarray
    caches: tuple[_PassCache, _PassCache] | None = None


def _run_pass(
    rays: Rays,
    t: np.ndarray,
    proj: ProjectionParams | None,
    field: RadianceFieldParams,
    cfg: EncodingConfig,
    white_background: bool,
) -> tuple[np.ndarray, np.ndarray, _PassCache]:
    n_rays, n_samples = t.shape
    points = rays.origins[:, None, :] + t[..., None] * rays.directions[:, None, :]
    dirs = np.broadcast_to(rays.directions[:, None, :], points.shape)
    rgb, sigma, ccache = composed_forward(
        proj, field, points.reshape(-1, 3), dirs.reshape(-1, 3), cfg
    )
    color, weights, _, comp = composite(
        rgb.reshape(n_rays, n_samples, 3),
        sigma.reshape(n_rays, n_samples),
        sample_deltas(t),
        white_background,
    )
    return color, weights, _PassCache(ccache, comp, n_rays, n_samples)


def render_rays(
    rays: Rays,
    fields: FieldSet,
    opts: RenderOptions,
    rng: np.random.Generator | None = None,
    keep_cache: bool = False,
) -> RenderResult:
    """Render a batch of rays through the coarse and fine passes.

    When ``fields.projection`` is set every sample position is projected
    before field evaluation, in both passes. Importance sample placement is
    a constant for differentiation.
    """
    dtype = fields.coarse.dtype
    cfg = fields.encoding
    t_coarse = sample_stratified(
        rays.t_near, rays.t_far, len(rays), opts.n_coarse, opts.jitter, rng, dtype
    )
    coarse_color, coarse_w, coarse_cache = _run_pass(
        rays, t_coarse, fields.projection, fields.coarse, cfg, opts.white_background
    )

    t_fine = t_coarse
    if opts.n_fine > 0:
        edges = bin_edges(t_coarse, rays.t_near, rays.t_far)
        t_extra = sample_importance(
            edges, coarse_w, opts.n_fine, rng, deterministic=not opts.jitter
        )
        t_fine = merge_samples(t_coarse, t_extra)
    fine_color, fine_w, fine_cache = _run_pass(
        rays, t_fine, fields.projection, fields.fine, cfg, opts.white_background
    )
    depth = (fine_w * t_fine).sum(axis=-1)
    return RenderResult(
        coarse_color=coarse_color,
        fine_color=fine_color,
        coarse_weights=coarse_w,
        fine_weights=fine_w,
        fine_t=t_fine,
        depth=depth,
        caches=(coarse_cache, fine_cache) if keep_cache else None,
    )


def render_ray(
    ray: Rays,
    fields: FieldSet,
    opts: RenderOptions,
    rng: np.random.Generator | None = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Single-ray convenience form: ``(coarse_color, fine_color, fine_weights)``."""
    result = render_rays(ray, fields, opts, rng)
    return result.coarse_color[0], result.fine_color[0], result.fine_weights[0]


def render_backward(
    fields: FieldSet,
    result: RenderResult,
    d_coarse: np.ndarray,
    d_fine: np.ndarray,
    grads: dict[str, ParamSet],
) -> None:
    """Accumulate gradients into ``grads`` keyed by group name.

    Groups missing from ``grads`` are frozen. The projection module is shared
    by both passes, so both contribute to its gradient.
    """
    if result.caches is None:
        raise ValueError("render_rays was called without keep_cache")
    cfg = fields.encoding
    proj_grads = grads.get("projection") if fields.projection is not None else None
    passes = (
        (fields.coarse, grads.get("coarse"), result.caches[0], d_coarse),
        (fields.fine, grads.get("fine"), result.caches[1], d_fine),
    )
    for field, field_grads, cache, d_color in passes:
        if field_grads is None and proj_grads is None:
            continue
        d_rgb, d_sigma = composite_backward(cache.composite, d_color)
        composed_backward(
            fields.projection,
            field,
            cache.composed,
            d_rgb.reshape(-1, 3),
            d_sigma.reshape(-1),
            cfg,
            field_grads,
            proj_grads,
        )


def chunk_slices(n: int, size: int) -> list[slice]:
    return [slice(start, min(start + size, n)) for start in range(0, n, size)]


def render_image(
    cam: Camera,
    fields: FieldSet,
    opts: RenderOptions,
    chunk: int = CHUNK_RAYS,
    threads: int = THREADS,
    t_near: float = NEAR,
    t_far: float = FAR,
) -> tuple[ImageBuffer, np.ndarray]:
    """Render a full image deterministically (jitter is forced off).

    Returns:
        The colour image from the fine pass and an ``(H, W)`` expected-depth map
    """
    eval_opts = opts.model_copy(update={"jitter": False})
    rays = camera_rays(cam, t_near, t_far, dtype=fields.coarse.dtype.type)

    def work(index: slice) -> tuple[np.ndarray, np.ndarray]:
        out = render_rays(rays.subset(index), fields, eval_opts)
        return out.fine_color, out.depth

    slices = chunk_slices(len(rays), chunk)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, slices))
    else:
        parts = [work(s) for s in slices]
    color = np.concatenate([p[0] for p in parts]).reshape(cam.height, cam.width, 3)
    depth = np.concatenate([p[1] for p in parts]).reshape(cam.height, cam.width)
    logger.debug(f"Rendered {cam.width}x{cam.height} image in {len(slices)} chunks")
    return ImageBuffer(pixels=np.clip(color, 0.0, 1.0).astype(np.float64)), depth
