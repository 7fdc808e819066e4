"""
Pixel-level ray pools built from Blender-format splits.
"""

from dataclasses import dataclass

import numpy as np

from src.constants import FAR, NEAR
from src.datasets.blender import DatasetManifest
from src.datasets.images import ImageBuffer
from src.errors import ContractViolation
from src.rendering.camera import Camera, Rays, camera_rays


def frame_cameras(manifest: DatasetManifest, images: list[ImageBuffer]) -> list[Camera]:
    return [
        Camera(
            width=img.width,
            height=img.height,
            camera_angle_x=manifest.camera_angle_x,
            c2w=frame.c2w(),
        )
        for frame, img in zip(manifest.frames, images, strict=True)
    ]


@dataclass
class RayDataset:
    """Every pixel of every training image as one ray with its target colour."""

    origins: np.ndarray
    directions: np.ndarray
    colors: np.ndarray
    image_index: np.ndarray
    n_images: int
    t_near: float = NEAR
    t_far: float = FAR

    def __len__(self) -> int:
        return len(self.colors)

    @classmethod
    def from_split(
        cls, manifest: DatasetManifest, images: list[ImageBuffer], dtype: type = np.float32
    ) -> "RayDataset":
        origins, directions, colors, index = [], [], [], []
        for k, (cam, img) in enumerate(zip(frame_cameras(manifest, images), images, strict=True)):
            rays = camera_rays(cam, dtype=dtype)
            origins.append(rays.origins)
            directions.append(rays.directions)
            colors.append(img.pixels.reshape(-1, 3).astype(dtype))
            index.append(np.full(len(rays), k))
        if not colors:
            return cls(
                origins=np.zeros((0, 3), dtype),
                directions=np.zeros((0, 3), dtype),
                colors=np.zeros((0, 3), dtype),
                image_index=np.zeros(0, dtype=int),
                n_images=0,
            )
        return cls(
            origins=np.concatenate(origins),
            directions=np.concatenate(directions),
            colors=np.concatenate(colors),
            image_index=np.concatenate(index),
            n_images=len(images),
        )


def sample_ray_batch(
    dataset: RayDataset, n: int, rng: np.random.Generator
) -> tuple[Rays, np.ndarray]:
    """``n`` pixels drawn uniformly with replacement across all images."""
    if len(dataset) == 0:
        raise ContractViolation("Cannot sample rays from an empty dataset")
    idx = rng.integers(0, len(dataset), size=n)
    rays = Rays(
        origins=dataset.origins[idx],
        directions=dataset.directions[idx],
        t_near=dataset.t_near,
        t_far=dataset.t_far,
    )
    return rays, dataset.colors[idx]
