"""
Analytic ray tracer used as ground truth: nearest ray-primitive hit across
the parts of one state, shaded ``albedo·(ambient + diffuse·max(0, −d·n))``.
"""

import numpy as np

from src.datasets.images import ImageBuffer
from src.rendering.camera import Camera, camera_rays
from src.scenegen.scene import ArticulatedScene, Box, RigidPart

HIT_EPS = 1e-9


def _intersect_box(
    o: np.ndarray, d: np.ndarray, half: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Slab test in local coordinates; returns t, local normal, face index."""
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / d
        t1 = (-half - o) * inv
        t2 = (half - o) * inv
    t_min = np.nanmax(np.fmin(t1, t2), axis=-1)
    t_max = np.nanmin(np.fmax(t1, t2), axis=-1)
    t = np.where(t_min > HIT_EPS, t_min, t_max)
    hit = (t_max >= t_min) & (t > HIT_EPS)
    t = np.where(hit, t, np.inf)

    p = o + np.where(hit, t, 0.0)[:, None] * d
    axis = np.argmax(np.abs(p) / half, axis=-1)
    sign = np.sign(np.take_along_axis(p, axis[:, None], axis=-1))[:, 0]
    sign = np.where(sign == 0, 1.0, sign)
    normal = np.zeros_like(p)
    normal[np.arange(len(p)), axis] = sign
    face = 2 * axis + (sign < 0)
    return t, normal, face


def _intersect_sphere(
    o: np.ndarray, d: np.ndarray, radius: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    a = np.einsum("ij,ij->i", d, d)
    b = 2.0 * np.einsum("ij,ij->i", o, d)
    c = np.einsum("ij,ij->i", o, o) - radius * radius
    disc = b * b - 4.0 * a * c
    root = np.sqrt(np.maximum(disc, 0.0))
    t_near = (-b - root) / (2.0 * a)
    t_far = (-b + root) / (2.0 * a)
    t = np.where(t_near > HIT_EPS, t_near, t_far)
    hit = (disc >= 0) & (t > HIT_EPS)
    t = np.where(hit, t, np.inf)
    p = o + np.where(hit, t, 0.0)[:, None] * d
    return t, p / radius, np.zeros(len(o), dtype=int)


def trace_part(
    part: RigidPart, state: str, origins: np.ndarray, directions: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Hit distance (world units, inf on miss), world normal and albedo per ray."""
    pose = part.poses[state]
    o_local = pose.inverse(origins)
    # Same t parameterizes the world and local rays
    d_local = (directions @ pose.rotation) / pose.scale
    if isinstance(part.primitive, Box):
        t, n_local, face = _intersect_box(o_local, d_local, np.asarray(part.primitive.half_extents))
    else:
        t, n_local, face = _intersect_sphere(o_local, d_local, part.primitive.radius)
    normal = n_local @ pose.rotation.T
    if part.face_albedo is not None:
        albedo = np.asarray(part.face_albedo)[face]
    else:
        albedo = np.broadcast_to(np.asarray(part.albedo), normal.shape)
    return t, normal, albedo


def trace(
    scene: ArticulatedScene, state: str, origins: np.ndarray, directions: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Shaded colour per ray (white on miss) and the hit distance."""
    n = len(origins)
    best_t = np.full(n, np.inf)
    color = np.ones((n, 3))
    for part in scene.visible_parts(state):
        t, normal, albedo = trace_part(part, state, origins, directions)
        closer = t < best_t
        if not np.any(closer):
            continue
        lambert = np.maximum(0.0, -np.einsum("ij,ij->i", directions, normal))
        shade = albedo * (scene.ambient + scene.diffuse * lambert)[:, None]
        color[closer] = shade[closer]
        best_t[closer] = t[closer]
    return np.clip(color, 0.0, 1.0), best_t


def oracle_render(scene: ArticulatedScene, state: str, cam: Camera) -> ImageBuffer:
    rays = camera_rays(cam, dtype=np.float64)
    color, _ = trace(scene, state, rays.origins, rays.directions)
    return ImageBuffer(pixels=color.reshape(cam.height, cam.width, 3))
