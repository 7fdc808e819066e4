"""
Synthetic dataset emission: random cameras around the scene, oracle renders,
Blender-format output.
"""

import logging
import math
from pathlib import Path
from typing import Literal

import numpy as np

from src.constants import CAMERA_RADIUS
from src.datasets.blender import DatasetManifest, Frame, Split, save_dataset
from src.errors import ContractViolation
from src.rendering.camera import Camera, look_at
from src.scenegen.oracle import oracle_render
from src.scenegen.scene import ArticulatedScene

logger = logging.getLogger("knerf-scenegen")

ViewMode = Literal["hemisphere", "front"]

DEFAULT_CAMERA_ANGLE_X = 0.6911112070083618
FRONT_HALF_WEDGE = math.radians(60.0)


def sample_camera_positions(
    n_views: int, seed: int, radius: float = CAMERA_RADIUS, view_mode: ViewMode = "hemisphere"
) -> np.ndarray:
    """Uniform on the upper hemisphere; ``front`` keeps azimuths within 60° of +y."""
    rng = np.random.default_rng(seed)
    z = rng.uniform(0.0, 1.0, n_views)
    if view_mode == "front":
        phi = rng.uniform(math.pi / 2 - FRONT_HALF_WEDGE, math.pi / 2 + FRONT_HALF_WEDGE, n_views)
    else:
        phi = rng.uniform(0.0, 2.0 * math.pi, n_views)
    ring = np.sqrt(1.0 - z * z)
    return radius * np.stack([ring * np.cos(phi), ring * np.sin(phi), z], axis=-1)


def emit_dataset(
    scene: ArticulatedScene,
    state: str,
    n_views: int,
    seed: int,
    out_dir: Path,
    split: Split = "train",
    resolution: int = 64,
    camera_angle_x: float = DEFAULT_CAMERA_ANGLE_X,
    view_mode: ViewMode = "hemisphere",
) -> DatasetManifest:
    """Render ``n_views`` random views of ``state`` into ``out_dir``.

    The output is a function of the arguments only, so re-running with the
    same seed reproduces the files byte for byte.

    Raises:
        ContractViolation: ``n_views < 1``
        DatasetError: ``out_dir`` cannot be written
    """
    if n_views < 1:
        raise ContractViolation(f"n_views must be at least 1, got {n_views}")
    scene.visible_parts(state)

    frames: list[Frame] = []
    images = []
    for i, position in enumerate(sample_camera_positions(n_views, seed, view_mode=view_mode)):
        c2w = look_at(position)
        cam = Camera(width=resolution, height=resolution, camera_angle_x=camera_angle_x, c2w=c2w)
        images.append(oracle_render(scene, state, cam))
        frames.append(Frame(file_path=f"./{split}/r_{i}", transform_matrix=c2w.tolist()))

    manifest = DatasetManifest(camera_angle_x=camera_angle_x, frames=frames)
    save_dataset(manifest, images, Path(out_dir), split)
    logger.info(
        f"Emitted {n_views} {split} views of {scene.name}/{state} "
        f"({view_mode}, seed {seed}) to {out_dir}"
    )
    return manifest
