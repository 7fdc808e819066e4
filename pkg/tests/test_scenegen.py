import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from pydantic import ValidationError

from src.constants import CAMERA_RADIUS, SCENE_BOUND
from src.errors import ConfigError, ContractViolation, CorrespondenceError
from src.rendering.camera import Camera, look_at
from src.scenegen.builtin import BUILTIN_SCENES, get_scene, hinge_box, peek_box, slide_box
from src.scenegen.correspondence import (
    gt_correspondence,
    gt_correspondence_batch,
    sample_surface_points,
)
from src.scenegen.emit import DEFAULT_CAMERA_ANGLE_X, emit_dataset
from src.scenegen.oracle import oracle_render, trace
from src.scenegen.scene import (
    ArticulatedScene,
    Box,
    Pose,
    RigidPart,
    Sphere,
    check_no_interpenetration,
    load_scene,
    save_scene,
)

ALBEDO = [0.2, 0.4, 0.6]


def _single_part_scene(primitive, state_1_pose=None) -> ArticulatedScene:
    part = RigidPart(
        id="solo",
        primitive=primitive,
        albedo=ALBEDO,
        poses={"state_0": Pose(), "state_1": state_1_pose or Pose()},
    )
    return ArticulatedScene(name="solo", states=["state_0", "state_1"], parts=[part])


def _pose_matrix(pose: Pose) -> np.ndarray:
    m = np.eye(4)
    m[:3, :3] = pose.scale * pose.rotation
    m[:3, 3] = pose.translation
    return m


def test_oracle_miss_is_white():
    c2w = np.diag([1.0, -1.0, -1.0, 1.0])
    c2w[:3, 3] = [0.0, 0.0, 4.0]
    cam = Camera(width=8, height=8, camera_angle_x=0.7, c2w=c2w)
    image = oracle_render(hinge_box(), "state_0", cam)
    assert np.array_equal(image.pixels, np.ones((8, 8, 3)))


def test_oracle_head_on_box_shows_full_albedo():
    scene = _single_part_scene(Box(half_extents=[0.5, 0.5, 0.5]))
    cam = Camera(width=5, height=5, camera_angle_x=0.7, c2w=look_at(np.array([0.0, 0.0, 4.0])))
    image = oracle_render(scene, "state_0", cam)
    np.testing.assert_allclose(image.pixels[2, 2], ALBEDO, atol=1e-9)


def test_oracle_sphere_silhouette_area():
    radius, distance = 0.5, 4.0
    scene = _single_part_scene(Sphere(radius=radius))
    cam = Camera(
        width=128,
        height=128,
        camera_angle_x=DEFAULT_CAMERA_ANGLE_X,
        c2w=look_at(np.array([0.0, 0.0, distance])),
    )
    image = oracle_render(scene, "state_0", cam)
    covered = np.count_nonzero(np.any(image.pixels < 1.0, axis=-1))
    disk_radius = cam.focal * math.tan(math.asin(radius / distance))
    assert covered == pytest.approx(math.pi * disk_radius**2, rel=0.02)


def test_oracle_face_albedo_follows_rotation():
    scene = peek_box()
    origins = np.array([[0.0, 4.0, 0.11]])
    directions = np.array([[0.0, -1.0, 0.0]])

    color_0, t_0 = trace(scene, "state_0", origins, directions)
    color_1, _ = trace(scene, "state_1", origins, directions)

    cube = scene.part("cube")
    np.testing.assert_allclose(color_0[0], cube.face_albedo[2], atol=1e-9)
    np.testing.assert_allclose(color_1[0], cube.face_albedo[5], atol=1e-9)
    assert t_0[0] == pytest.approx(3.8)


def test_static_part_maps_to_itself():
    scene = slide_box()
    x = np.array([[0.3, 0.3, -0.2], [-0.5, 0.1, -0.25]])
    mapped, valid = gt_correspondence_batch(scene, "state_0", "state_1", x)
    assert valid.all()
    np.testing.assert_allclose(mapped, x, atol=1e-12)


def test_sliding_block_translates():
    scene = slide_box()
    x = np.array([-0.2, 0.1, 0.2])
    forward = gt_correspondence(scene, "state_0", "state_1", x)
    np.testing.assert_allclose(forward, x + [0.25, 0.0, 0.0], atol=1e-12)

    y = np.array([0.05, 0.1, 0.2])
    backward = gt_correspondence(scene, "state_1", "state_0", y)
    np.testing.assert_allclose(backward, y - [0.25, 0.0, 0.0], atol=1e-12)


def test_free_space_has_no_correspondence():
    mapped, valid = gt_correspondence_batch(
        hinge_box(), "state_0", "state_1", np.array([[0.0, 0.0, 1.4]])
    )
    assert not valid.any()
    assert np.isnan(mapped).all()
    assert gt_correspondence(hinge_box(), "state_0", "state_1", np.array([0.0, 0.0, 1.4])) is None


def test_rotation_matches_homogeneous_matrices():
    moved = Pose(axis_angle=[0.0, 0.0, math.radians(30.0)], translation=[0.1, -0.2, 0.05])
    scene = _single_part_scene(Box(half_extents=[0.4, 0.3, 0.2]), moved)
    rng = np.random.default_rng(4)
    x = rng.uniform(-1.0, 1.0, size=(50, 3)) * [0.4, 0.3, 0.2]

    mapped, valid = gt_correspondence_batch(scene, "state_0", "state_1", x)

    transform = _pose_matrix(moved) @ np.linalg.inv(_pose_matrix(Pose()))
    expected = (np.c_[x, np.ones(len(x))] @ transform.T)[:, :3]
    assert valid.all()
    np.testing.assert_allclose(mapped, expected, atol=1e-9)


@settings(max_examples=50)
@given(st.tuples(*[st.floats(-0.9, 0.9)] * 3))
def test_lid_round_trip(fraction):
    scene = hinge_box()
    lid = scene.part("lid")
    local = np.asarray(fraction) * lid.primitive.half_extents
    x = lid.poses["state_0"].apply(local)

    there = gt_correspondence(scene, "state_0", "state_1", x)
    back = gt_correspondence(scene, "state_1", "state_0", there)

    np.testing.assert_allclose(back, x, atol=1e-9)


def test_lid_surface_stays_on_lid_surface():
    scene = hinge_box()
    lid = scene.part("lid")
    x = sample_surface_points(scene, "state_0", "lid", 200, seed=3)

    mapped, valid = gt_correspondence_batch(scene, "state_0", "state_1", x)

    assert valid.all()
    local = lid.poses["state_1"].inverse(mapped)
    extent = np.max(np.abs(local) / lid.primitive.half_extents, axis=-1)
    np.testing.assert_allclose(extent, 1.0, atol=1e-9)


def test_point_inside_two_parts_is_rejected():
    parts = [
        RigidPart(
            id=name,
            primitive=Box(half_extents=[0.3, 0.3, 0.3]),
            albedo=ALBEDO,
            poses={"state_0": Pose(), "state_1": Pose()},
        )
        for name in ("a", "b")
    ]
    scene = ArticulatedScene(name="overlap", states=["state_0", "state_1"], parts=parts)
    with pytest.raises(CorrespondenceError):
        gt_correspondence_batch(scene, "state_0", "state_1", np.zeros((1, 3)))
    with pytest.raises(ValueError):
        check_no_interpenetration(scene)


def test_box_surface_points_lie_on_faces():
    scene = slide_box()
    block = scene.part("block")
    x = sample_surface_points(scene, "state_1", "block", 1000, seed=0)
    local = block.poses["state_1"].inverse(x)
    extent = np.max(np.abs(local) / block.primitive.half_extents, axis=-1)
    np.testing.assert_allclose(extent, 1.0, atol=1e-12)


def test_sphere_surface_points_are_uniform():
    scene = get_scene("grow-sphere")
    ball = scene.part("ball")
    n = 100_000
    x = sample_surface_points(scene, "state_1", "ball", n, seed=5)
    pose = ball.poses["state_1"]
    center = np.asarray(pose.translation)
    radius = ball.primitive.radius * pose.scale

    np.testing.assert_allclose(np.linalg.norm(x - center, axis=-1), radius, atol=1e-12)
    sigma = radius / math.sqrt(3.0 * n)
    assert np.all(np.abs(x.mean(axis=0) - center) <= 4 * sigma)


def test_zero_surface_points():
    assert sample_surface_points(hinge_box(), "state_0", "lid", 0, seed=0).shape == (0, 3)


def _emitted_c2w(directory, split="train"):
    manifest = json.loads((directory / f"transforms_{split}.json").read_text())
    return [np.asarray(f["transform_matrix"]) for f in manifest["frames"]]


def test_emit_cameras_on_sphere_looking_at_origin(tmp_path):
    emit_dataset(hinge_box(), "state_0", 6, seed=1, out_dir=tmp_path, resolution=8)

    poses = _emitted_c2w(tmp_path)
    assert len(poses) == 6
    for c2w in poses:
        position = c2w[:3, 3]
        assert np.linalg.norm(position) == pytest.approx(CAMERA_RADIUS)
        assert position[2] >= 0.0
        forward = -c2w[:3, 2]
        np.testing.assert_allclose(np.cross(forward, -position), 0.0, atol=1e-9)
    assert sorted(p.name for p in (tmp_path / "train").iterdir()) == [
        f"r_{i}.png" for i in range(6)
    ]


def test_emit_is_reproducible(tmp_path):
    for run in ("a", "b"):
        emit_dataset(slide_box(), "state_1", 3, seed=7, out_dir=tmp_path / run, resolution=8)

    files = sorted(p.relative_to(tmp_path / "a") for p in (tmp_path / "a").rglob("*.*"))
    assert len(files) == 4
    for rel in files:
        assert (tmp_path / "a" / rel).read_bytes() == (tmp_path / "b" / rel).read_bytes()


def test_emit_requires_a_view(tmp_path):
    with pytest.raises(ContractViolation):
        emit_dataset(hinge_box(), "state_0", 0, seed=0, out_dir=tmp_path)


def test_emit_front_views_stay_in_wedge(tmp_path):
    emit_dataset(
        hinge_box(), "state_1", 20, seed=2, out_dir=tmp_path, resolution=4, view_mode="front"
    )
    for c2w in _emitted_c2w(tmp_path):
        x, y = c2w[0, 3], c2w[1, 3]
        azimuth = math.degrees(math.atan2(y, x))
        assert 30.0 - 1e-9 <= azimuth <= 150.0 + 1e-9


@pytest.mark.parametrize("name", sorted(BUILTIN_SCENES))
def test_builtin_scenes_are_valid(name):
    scene = get_scene(name)
    check_no_interpenetration(scene)
    low, high = scene.bounding_box()
    assert np.all(low >= -SCENE_BOUND) and np.all(high <= SCENE_BOUND)
    assert scene.diagonal() > 0


def test_unknown_scene_name():
    with pytest.raises(ConfigError):
        get_scene("no-such-scene")


def test_scene_file_round_trip(tmp_path):
    path = tmp_path / "scene.json"
    save_scene(hinge_box(), path)
    assert get_scene(str(path)).model_dump() == hinge_box().model_dump()


def test_scene_file_rejections(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"name": "x", "states": ["only"], "parts": []}')
    with pytest.raises(ConfigError):
        load_scene(bad)

    overlapping = tmp_path / "overlap.json"
    parts = [
        RigidPart(
            id=name,
            primitive=Sphere(radius=0.3),
            albedo=ALBEDO,
            poses={"state_0": Pose(), "state_1": Pose()},
        )
        for name in ("a", "b")
    ]
    save_scene(ArticulatedScene(name="o", states=["state_0", "state_1"], parts=parts), overlapping)
    with pytest.raises(ConfigError):
        load_scene(overlapping)


def test_scene_requires_a_pose_per_state():
    part = RigidPart(
        id="p", primitive=Sphere(radius=0.2), albedo=ALBEDO, poses={"state_0": Pose()}
    )
    with pytest.raises(ValidationError):
        ArticulatedScene(name="s", states=["state_0", "state_1"], parts=[part])


def test_pose_inverse_and_pivot():
    pose = Pose(axis_angle=[0.3, -0.2, 0.9], translation=[0.1, 0.2, -0.3], scale=1.4)
    u = np.random.default_rng(0).normal(size=(10, 3))
    np.testing.assert_allclose(pose.inverse(pose.apply(u)), u, atol=1e-12)

    pivot = [0.5, -0.5, 0.25]
    turned = Pose().rotated_about([0.0, 0.0, 1.0], pivot)
    np.testing.assert_allclose(turned.apply(np.asarray(pivot)), pivot, atol=1e-12)
