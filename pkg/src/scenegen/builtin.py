"""
Reference scenes, one per transformation class plus the new-content and
occlusion cases. All scenes are z-up and fit inside the default scene box.
"""

import math
from collections.abc import Callable
from pathlib import Path

from src.errors import ConfigError
from src.scenegen.scene import (
    ArticulatedScene,
    Box,
    Pose,
    RigidPart,
    Sphere,
    check_no_interpenetration,
    load_scene,
)

STATES = ["state_0", "state_1"]

# z in [-0.3, -0.1]
_PLATE = RigidPart(
    id="plate",
    primitive=Box(half_extents=[0.6, 0.6, 0.1]),
    albedo=[0.55, 0.55, 0.5],
    face_albedo=[
        [0.6, 0.55, 0.5],
        [0.5, 0.55, 0.6],
        [0.55, 0.6, 0.5],
        [0.5, 0.5, 0.55],
        [0.75, 0.72, 0.65],
        [0.3, 0.3, 0.3],
    ],
    poses={s: Pose(translation=[0.0, 0.0, -0.2]) for s in STATES},
)


def hinge_box() -> ArticulatedScene:
    """A lid hinged on the -x edge of a base, opened 35°."""
    lid0 = Pose(translation=[0.0, 0.0, 0.06])
    lid1 = lid0.rotated_about([0.0, -math.radians(35.0), 0.0], pivot=[-0.5, 0.0, 0.01])
    base = RigidPart(
        id="base",
        primitive=Box(half_extents=[0.5, 0.5, 0.25]),
        albedo=[0.8, 0.5, 0.2],
        face_albedo=[
            [0.85, 0.5, 0.2],
            [0.7, 0.45, 0.2],
            [0.8, 0.6, 0.25],
            [0.75, 0.4, 0.15],
            [0.9, 0.75, 0.4],
            [0.4, 0.25, 0.1],
        ],
        poses={s: Pose(translation=[0.0, 0.0, -0.25]) for s in STATES},
    )
    lid = RigidPart(
        id="lid",
        primitive=Box(half_extents=[0.5, 0.5, 0.05]),
        albedo=[0.2, 0.4, 0.8],
        face_albedo=[
            [0.2, 0.45, 0.85],
            [0.15, 0.35, 0.7],
            [0.25, 0.4, 0.8],
            [0.2, 0.3, 0.75],
            [0.35, 0.6, 0.95],
            [0.9, 0.85, 0.3],
        ],
        poses={"state_0": lid0, "state_1": lid1},
    )
    return ArticulatedScene(name="hinge-box", states=STATES, parts=[base, lid])


def slide_box() -> ArticulatedScene:
    """A block sliding half its length along +x on a static plate."""
    block0 = Pose(translation=[-0.2, 0.0, 0.16])
    block = RigidPart(
        id="block",
        primitive=Box(half_extents=[0.25, 0.25, 0.25]),
        albedo=[0.8, 0.3, 0.3],
        face_albedo=[
            [0.85, 0.3, 0.3],
            [0.6, 0.2, 0.25],
            [0.8, 0.45, 0.3],
            [0.7, 0.3, 0.45],
            [0.95, 0.6, 0.55],
            [0.3, 0.1, 0.1],
        ],
        poses={"state_0": block0, "state_1": block0.translated([0.25, 0.0, 0.0])},
    )
    return ArticulatedScene(name="slide-box", states=STATES, parts=[_PLATE, block])


def grow_sphere() -> ArticulatedScene:
    """A ball scaled by 1.3 while resting on the plate."""
    ball = RigidPart(
        id="ball",
        primitive=Sphere(radius=0.25),
        albedo=[0.3, 0.75, 0.35],
        poses={
            "state_0": Pose(translation=[0.0, 0.0, 0.16]),
            "state_1": Pose(translation=[0.0, 0.0, 0.235], scale=1.3),
        },
    )
    return ArticulatedScene(name="grow-sphere", states=STATES, parts=[_PLATE, ball])


def twin_envelope() -> ArticulatedScene:
    """A second, identical envelope appears next to the first one."""
    envelope0 = Pose(translation=[-0.25, -0.1, -0.07])
    box = RigidPart(
        id="postbox",
        primitive=Box(half_extents=[0.15, 0.15, 0.3]),
        albedo=[0.8, 0.15, 0.1],
        poses={s: Pose(translation=[0.0, 0.35, 0.21]) for s in STATES},
    )
    envelope = RigidPart(
        id="envelope",
        primitive=Box(half_extents=[0.2, 0.14, 0.02]),
        albedo=[0.95, 0.9, 0.75],
        poses={s: envelope0 for s in STATES},
    )
    twin = RigidPart(
        id="envelope_twin",
        primitive=Box(half_extents=[0.2, 0.14, 0.02]),
        albedo=[0.95, 0.9, 0.75],
        poses={"state_0": envelope0, "state_1": envelope0.translated([0.5, 0.0, 0.0])},
        hidden_in=["state_0"],
    )
    return ArticulatedScene(
        name="twin-envelope", states=STATES, parts=[_PLATE, box, envelope, twin]
    )


def peek_box() -> ArticulatedScene:
    """A cube whose red face lies on the plate in state 0 and faces +y in state 1."""
    cube0 = Pose(translation=[0.0, 0.0, 0.11])
    cube = RigidPart(
        id="cube",
        primitive=Box(half_extents=[0.2, 0.2, 0.2]),
        albedo=[0.7, 0.7, 0.6],
        face_albedo=[
            [0.7, 0.7, 0.6],
            [0.6, 0.65, 0.7],
            [0.65, 0.7, 0.55],
            [0.55, 0.6, 0.65],
            [0.75, 0.75, 0.7],
            [0.9, 0.1, 0.1],
        ],
        poses={
            "state_0": cube0,
            "state_1": cube0.rotated_about([math.pi / 2, 0.0, 0.0], pivot=cube0.translation),
        },
    )
    return ArticulatedScene(name="peek-box", states=STATES, parts=[_PLATE, cube])


BUILTIN_SCENES: dict[str, Callable[[], ArticulatedScene]] = {
    "hinge-box": hinge_box,
    "slide-box": slide_box,
    "grow-sphere": grow_sphere,
    "twin-envelope": twin_envelope,
    "peek-box": peek_box,
}


def get_scene(name_or_path: str) -> ArticulatedScene:
    """Builtin scene by name, otherwise a scene description file."""
    factory = BUILTIN_SCENES.get(name_or_path)
    if factory is not None:
        scene = factory()
        check_no_interpenetration(scene)
        return scene
    path = Path(name_or_path)
    if not path.is_file():
        raise ConfigError(
            f"Unknown scene {name_or_path!r}: not a builtin ({', '.join(BUILTIN_SCENES)}) "
            "and not a file"
        )
    return load_scene(path)
