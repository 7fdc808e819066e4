"""
Ground-truth point correspondences between states and surface sampling.
"""

import numpy as np

from src.errors import CorrespondenceError
from src.scenegen.scene import ArticulatedScene, Box

SURFACE_TOL = 1e-6


def gt_correspondence_batch(
    scene: ArticulatedScene, state_from: str, state_to: str, x: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Map ``(N, 3)`` points rigidly with the part containing them.

    Returns:
        Mapped points (NaN where free space) and the boolean mask of mapped rows

    Raises:
        CorrespondenceError: a point lies inside two parts
    """
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    out = np.full_like(x, np.nan)
    owner = np.full(len(x), -1)
    for k, part in enumerate(scene.visible_parts(state_from)):
        inside = part.contains(state_from, x, tol=SURFACE_TOL)
        clash = inside & (owner >= 0)
        if np.any(clash):
            raise CorrespondenceError(
                f"Point {x[np.argmax(clash)].tolist()} lies inside two parts in state {state_from}"
            )
        if np.any(inside):
            local = part.poses[state_from].inverse(x[inside])
            out[inside] = part.poses[state_to].apply(local)
            owner[inside] = k
    return out, owner >= 0


def gt_correspondence(
    scene: ArticulatedScene, state_from: str, state_to: str, x: np.ndarray
) -> np.ndarray | None:
    """Single-point form; ``None`` when ``x`` is in free space."""
    mapped, valid = gt_correspondence_batch(scene, state_from, state_to, x)
    return mapped[0] if valid[0] else None


def sample_surface_points(
    scene: ArticulatedScene, state: str, part_id: str, n: int, seed: int
) -> np.ndarray:
    """``n`` points uniform over the part's surface, posed for ``state``."""
    part = scene.part(part_id)
    rng = np.random.default_rng(seed)
    if n == 0:
        return np.zeros((0, 3))
    if isinstance(part.primitive, Box):
        h = np.asarray(part.primitive.half_extents)
        # Faces ±axis a have area 4·h_b·h_c
        areas = np.array([h[1] * h[2], h[0] * h[2], h[0] * h[1]])
        axis = rng.choice(3, size=n, p=areas / areas.sum())
        local = rng.uniform(-1.0, 1.0, size=(n, 3)) * h
        sign = np.where(rng.random(n) < 0.5, -1.0, 1.0)
        local[np.arange(n), axis] = sign * h[axis]
    else:
        g = rng.standard_normal((n, 3))
        local = part.primitive.radius * g / np.linalg.norm(g, axis=-1, keepdims=True)
    return part.poses[state].apply(local)
