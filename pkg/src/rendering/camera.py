"""
Pinhole camera in the Blender convention (camera looks down -z, +y up).
"""

import math

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from src.constants import FAR, NEAR


class Camera(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    width: int = Field(gt=0, description="Image width in pixels")
    height: int = Field(gt=0, description="Image height in pixels")
    camera_angle_x: float = Field(gt=0, lt=math.pi, description="Horizontal field of view")
    c2w: np.ndarray = Field(description="4x4 camera-to-world matrix")

    @field_validator("c2w")
    @classmethod
    def _check_pose(cls, value: np.ndarray) -> np.ndarray:
        value = np.asarray(value, dtype=np.float64)
        if value.shape != (4, 4):
            raise ValueError(f"c2w must be 4x4, got {value.shape}")
        R = value[:3, :3]
        if not np.allclose(R.T @ R, np.eye(3), atol=1e-5):
            raise ValueError("c2w rotation block is not orthonormal")
        return value

    @property
    def focal(self) -> float:
        return 0.5 * self.width / math.tan(0.5 * self.camera_angle_x)


class Rays(BaseModel):
    """A batch of rays ``origin + t·direction`` for ``t`` in ``[t_near, t_far]``."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    origins: np.ndarray = Field(description="(R, 3) world-space origins")
    directions: np.ndarray = Field(description="(R, 3) unit directions")
    t_near: float = NEAR
    t_far: float = FAR

    def __len__(self) -> int:
        return self.origins.shape[0]

    def subset(self, index: np.ndarray | slice) -> "Rays":
        return Rays(
            origins=self.origins[index],
            directions=self.directions[index],
            t_near=self.t_near,
            t_far=self.t_far,
        )


def camera_rays(
    cam: Camera, t_near: float = NEAR, t_far: float = FAR, dtype: type = np.float32
) -> Rays:
    """One ray per pixel, row-major (pixel ``(i, j)`` at index ``j·W + i``)."""
    f = cam.focal
    i, j = np.meshgrid(
        np.arange(cam.width, dtype=np.float64),
        np.arange(cam.height, dtype=np.float64),
        indexing="xy",
    )
    dirs = np.stack(
        [
            (i + 0.5 - cam.width / 2) / f,
            -(j + 0.5 - cam.height / 2) / f,
            -np.ones_like(i),
        ],
        axis=-1,
    ).reshape(-1, 3)
    world = dirs @ cam.c2w[:3, :3].T
    world /= np.linalg.norm(world, axis=-1, keepdims=True)
    origins = np.broadcast_to(cam.c2w[:3, 3], world.shape)
    return Rays(
        origins=np.ascontiguousarray(origins, dtype=dtype),
        directions=world.astype(dtype),
        t_near=t_near,
        t_far=t_far,
    )


def look_at(position: np.ndarray, target: np.ndarray | None = None) -> np.ndarray:
    """Camera-to-world matrix at ``position`` looking at ``target`` with +z up."""
    target = np.zeros(3) if target is None else target
    forward = target - position
    forward = forward / np.linalg.norm(forward)
    up = np.array([0.0, 0.0, 1.0])
    right = np.cross(forward, up)
    if np.linalg.norm(right) < 1e-6:
        right = np.cross(forward, np.array([0.0, 1.0, 0.0]))
    right /= np.linalg.norm(right)
    cam_up = np.cross(right, forward)
    c2w = np.eye(4)
    c2w[:3, 0] = right
    c2w[:3, 1] = cam_up
    c2w[:3, 2] = -forward
    c2w[:3, 3] = position
    return c2w


def orbit_poses(n: int, radius: float, elevation_deg: float = 30.0) -> list[np.ndarray]:
    elev = math.radians(elevation_deg)
    poses = []
    for k in range(n):
        azim = 2.0 * math.pi * k / n
        pos = radius * np.array(
            [math.cos(elev) * math.cos(azim), math.cos(elev) * math.sin(azim), math.sin(elev)]
        )
        poses.append(look_at(pos))
    return poses
