"""
Validation renders and projection-recovery measurement.
"""

from collections.abc import Sequence

import numpy as np
from pydantic import BaseModel, Field

from src.datasets.images import ImageBuffer
from src.errors import ContractViolation
from src.fields.encoding import EncodingConfig
from src.fields.projection import ProjectionParams, project
from src.metrics.image import mse_image, psnr
from src.rendering.camera import Camera
from src.rendering.renderer import FieldSet, RenderOptions, render_image
from src.scenegen.correspondence import gt_correspondence_batch, sample_surface_points
from src.scenegen.scene import ArticulatedScene
from src.training.config import TrainConfig

ValidationView = tuple[Camera, ImageBuffer]


def validation_psnr(
    fields: FieldSet, views: Sequence[ValidationView], opts: RenderOptions, cfg: TrainConfig
) -> float:
    """PSNR of the mean squared error over jitter-free renders of ``views``."""
    if not views:
        raise ContractViolation("No validation views")
    errors = [
        mse_image(render_image(cam, fields, opts, cfg.chunk_rays, cfg.threads)[0], target)
        for cam, target in views
    ]
    return psnr(float(np.mean(errors)))


class ProjectionErrorReport(BaseModel):
    part_id: str
    n_points: int = Field(description="Surface points with a ground-truth correspondence")
    median_error: float = Field(description="World units")
    diagonal: float = Field(description="Scene bounding-box diagonal")
    ratio: float = Field(description="median_error / diagonal")


def projection_error(
    scene: ArticulatedScene,
    proj: ProjectionParams,
    cfg: EncodingConfig,
    part_id: str,
    n: int = 2000,
    seed: int = 0,
    deformed_state: str | None = None,
    canonical_state: str | None = None,
) -> ProjectionErrorReport:
    """Median distance between ``project(x1)`` and the exact correspondence.

    Points are sampled on ``part_id``'s surface in the deformed state (the
    scene's last state unless given) and mapped to the canonical (first)
    state.
    """
    deformed = deformed_state or scene.states[-1]
    canonical = canonical_state or scene.states[0]
    x1 = sample_surface_points(scene, deformed, part_id, n, seed)
    target, valid = gt_correspondence_batch(scene, deformed, canonical, x1)
    if not np.any(valid):
        raise ContractViolation(f"No surface point of {part_id} has a correspondence")
    dtype = proj.tensors["layer.0.W"].dtype
    predicted = project(proj, x1[valid].astype(dtype), cfg).astype(np.float64)
    median = float(np.median(np.linalg.norm(predicted - target[valid], axis=-1)))
    diagonal = scene.diagonal()
    return ProjectionErrorReport(
        part_id=part_id,
        n_points=int(valid.sum()),
        median_error=median,
        diagonal=diagonal,
        ratio=median / diagonal,
    )
