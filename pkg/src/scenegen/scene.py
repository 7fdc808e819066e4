"""
Articulated scenes made of rigid primitives with one pose per state.

A pose maps local coordinates ``u`` to world coordinates ``y = s·R·u + t``.
Rotations are stored as axis-angle vectors so scene files stay readable.
"""

import logging
from functools import cached_property
from pathlib import Path
from typing import Annotated, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator
from scipy.spatial.transform import Rotation

from src.errors import ConfigError

logger = logging.getLogger("knerf-scenegen")

Vec3 = Annotated[list[float], Field(min_length=3, max_length=3)]


class Pose(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    axis_angle: Vec3 = Field(default=[0.0, 0.0, 0.0], description="Rotation vector, radians")
    translation: Vec3 = Field(default=[0.0, 0.0, 0.0])
    scale: float = Field(default=1.0, gt=0)

    @cached_property
    def rotation(self) -> np.ndarray:
        return Rotation.from_rotvec(self.axis_angle).as_matrix()

    def apply(self, u: np.ndarray) -> np.ndarray:
        """Local -> world for ``(3,)`` or ``(N, 3)`` points."""
        return self.scale * (u @ self.rotation.T) + np.asarray(self.translation)

    def inverse(self, y: np.ndarray) -> np.ndarray:
        """World -> local."""
        return ((y - np.asarray(self.translation)) @ self.rotation) / self.scale

    def rotated_about(self, axis_angle: Vec3, pivot: Vec3) -> "Pose":
        """This pose followed by a world-space rotation about ``pivot``."""
        extra = Rotation.from_rotvec(axis_angle)
        p = np.asarray(pivot)
        t = extra.apply(np.asarray(self.translation) - p) + p
        rot = extra * Rotation.from_rotvec(self.axis_angle)
        return Pose(axis_angle=list(rot.as_rotvec()), translation=list(t), scale=self.scale)

    def translated(self, offset: Vec3) -> "Pose":
        t = np.asarray(self.translation) + np.asarray(offset)
        return self.model_copy(update={"translation": list(t)})


class Box(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["box"] = "box"
    half_extents: Vec3

    def contains(self, u: np.ndarray, tol: float = 0.0) -> np.ndarray:
        return np.all(np.abs(u) <= np.asarray(self.half_extents) + tol, axis=-1)

    def bounding_radius(self) -> float:
        return float(np.linalg.norm(self.half_extents))


class Sphere(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["sphere"] = "sphere"
    radius: float = Field(gt=0)

    def contains(self, u: np.ndarray, tol: float = 0.0) -> np.ndarray:
        return np.linalg.norm(u, axis=-1) <= self.radius + tol

    def bounding_radius(self) -> float:
        return self.radius


Primitive = Annotated[Box | Sphere, Field(discriminator="kind")]

Color = Annotated[list[float], Field(min_length=3, max_length=3)]


class RigidPart(BaseModel):
    model_config = ConfigDict(extra="forbid")

    id: str
    primitive: Primitive
    albedo: Color = Field(description="RGB in [0, 1]")
    face_albedo: list[Color] | None = Field(
        default=None, description="Per-face RGB for boxes, order +x, -x, +y, -y, +z, -z"
    )
    poses: dict[str, Pose]
    hidden_in: list[str] = Field(default_factory=list, description="States without this part")

    @model_validator(mode="after")
    def _check_albedo(self) -> "RigidPart":
        colors = [self.albedo, *(self.face_albedo or [])]
        if any(not 0.0 <= c <= 1.0 for color in colors for c in color):
            raise ValueError(f"Part {self.id}: albedo outside [0, 1]")
        if self.face_albedo is not None:
            if not isinstance(self.primitive, Box) or len(self.face_albedo) != 6:
                raise ValueError(f"Part {self.id}: face_albedo needs a box and 6 colours")
        return self

    def visible_in(self, state: str) -> bool:
        return state not in self.hidden_in

    def contains(self, state: str, x: np.ndarray, tol: float = 0.0) -> np.ndarray:
        pose = self.poses[state]
        return self.primitive.contains(pose.inverse(x), tol / pose.scale)


class ArticulatedScene(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str
    states: list[str] = Field(min_length=2)
    parts: list[RigidPart] = Field(min_length=1)
    ambient: float = Field(default=0.3, ge=0, description="Constant shading term")
    diffuse: float = Field(default=0.7, ge=0, description="Headlight Lambert coefficient")

    @model_validator(mode="after")
    def _check_poses(self) -> "ArticulatedScene":
        ids = [p.id for p in self.parts]
        if len(set(ids)) != len(ids):
            raise ValueError(f"Duplicate part ids in scene {self.name}")
        for part in self.parts:
            missing = set(self.states) - set(part.poses)
            if missing:
                raise ValueError(f"Part {part.id} has no pose for states {sorted(missing)}")
        return self

    def part(self, part_id: str) -> RigidPart:
        for p in self.parts:
            if p.id == part_id:
                return p
        raise KeyError(f"Scene {self.name} has no part {part_id}")

    def visible_parts(self, state: str) -> list[RigidPart]:
        if state not in self.states:
            raise KeyError(f"Scene {self.name} has no state {state}")
        return [p for p in self.parts if p.visible_in(state)]

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        """Axis-aligned box enclosing every visible part in every state."""
        lows, highs = [], []
        for state in self.states:
            for part in self.visible_parts(state):
                pose = part.poses[state]
                if isinstance(part.primitive, Box):
                    h = np.asarray(part.primitive.half_extents)
                    corners = np.array(np.meshgrid(*[[-1, 1]] * 3)).reshape(3, -1).T * h
                    world = pose.apply(corners)
                    lows.append(world.min(axis=0))
                    highs.append(world.max(axis=0))
                else:
                    r = part.primitive.radius * pose.scale
                    c = np.asarray(pose.translation)
                    lows.append(c - r)
                    highs.append(c + r)
        return np.min(lows, axis=0), np.max(highs, axis=0)

    def diagonal(self) -> float:
        low, high = self.bounding_box()
        return float(np.linalg.norm(high - low))


def check_no_interpenetration(scene: ArticulatedScene, n: int = 4000, seed: int = 0) -> None:
    """Sample each part's interior and reject points strictly inside another part."""
    rng = np.random.default_rng(seed)
    for state in scene.states:
        parts = scene.visible_parts(state)
        for part in parts:
            radius = part.primitive.bounding_radius()
            local = rng.uniform(-radius, radius, size=(n, 3))
            local = local[part.primitive.contains(local)]
            world = part.poses[state].apply(local)
            for other in parts:
                if other.id == part.id:
                    continue
                if np.any(other.contains(state, world, tol=-1e-6)):
                    raise ValueError(
                        f"Parts {part.id} and {other.id} interpenetrate in state {state}"
                    )


def load_scene(path: Path) -> ArticulatedScene:
    try:
        scene = ArticulatedScene.model_validate_json(Path(path).read_text())
    except ValidationError as e:
        raise ConfigError(f"Invalid scene file {path}: {e!s}") from e
    try:
        check_no_interpenetration(scene)
    except ValueError as e:
        raise ConfigError(f"Invalid scene file {path}: {e!s}") from e
    logger.info(f"Loaded scene {scene.name} with {len(scene.parts)} parts from {path}")
    return scene


def save_scene(scene: ArticulatedScene, path: Path) -> None:
    Path(path).write_text(scene.model_dump_json(indent=4) + "\n")
