import math
from unittest.mock import patch

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy.stats import kstest

from src.constants import DELTA_SENTINEL
from src.diffcore.gradcheck import grad_check
from src.diffcore.params import zeros_like
from src.errors import ContractViolation
from src.rendering.camera import Camera, Rays, camera_rays, look_at, orbit_poses
from src.rendering.compositing import composite, composite_backward
from src.rendering.renderer import (
    RenderOptions,
    chunk_slices,
    render_backward,
    render_image,
    render_ray,
    render_rays,
)
from src.rendering.sampling import (
    bin_edges,
    merge_samples,
    sample_deltas,
    sample_importance,
    sample_stratified,
)


def _camera(width=5, height=5, c2w=None, angle=0.7):
    return Camera(
        width=width, height=height, camera_angle_x=angle, c2w=np.eye(4) if c2w is None else c2w
    )


def _zero_fields(fields):
    def zeroed(field):
        return field.model_copy(update={"tensors": zeros_like(field.tensors)})

    return fields.model_copy(update={"coarse": zeroed(fields.coarse), "fine": zeroed(fields.fine)})


def test_center_pixel_looks_down_the_optical_axis():
    rays = camera_rays(_camera(), dtype=np.float64)
    center = 2 * 5 + 2
    np.testing.assert_allclose(rays.directions[center], [0.0, 0.0, -1.0], atol=1e-12)
    assert np.array_equal(rays.origins[center], [0.0, 0.0, 0.0])


def test_ray_directions_are_unit():
    cam = _camera(width=16, height=12, c2w=look_at(np.array([2.0, -3.0, 1.5])))
    rays = camera_rays(cam, dtype=np.float64)
    assert len(rays) == 16 * 12
    np.testing.assert_allclose(np.linalg.norm(rays.directions, axis=-1), 1.0, atol=1e-6)
    np.testing.assert_allclose(rays.origins, np.tile([2.0, -3.0, 1.5], (len(rays), 1)))


def test_corner_pixel_angle():
    cam = _camera(width=64, height=48)
    rays = camera_rays(cam, dtype=np.float64)
    f = cam.focal
    expected = math.atan(math.hypot((32 - 0.5) / f, (24 - 0.5) / f))
    angle = math.acos(-rays.directions[0, 2])
    assert angle == pytest.approx(expected, abs=1e-4)


def test_camera_rejects_non_orthonormal_pose():
    c2w = np.eye(4)
    c2w[0, 0] = 2.0
    with pytest.raises(ValueError):
        _camera(c2w=c2w)
    with pytest.raises(ValueError):
        _camera(c2w=np.eye(3))


def test_look_at_points_the_optical_axis_at_target():
    position = np.array([1.0, 2.0, 3.0])
    c2w = look_at(position)
    forward = -c2w[:3, 2]
    np.testing.assert_allclose(np.cross(forward, -position), 0.0, atol=1e-12)
    np.testing.assert_allclose(c2w[:3, :3].T @ c2w[:3, :3], np.eye(3), atol=1e-12)
    assert np.linalg.det(c2w[:3, :3]) == pytest.approx(1.0)


def test_orbit_poses_keep_radius():
    poses = orbit_poses(6, radius=4.0)
    assert len(poses) == 6
    for c2w in poses:
        assert np.linalg.norm(c2w[:3, 3]) == pytest.approx(4.0)


def test_stratified_midpoints():
    t = sample_stratified(0.0, 1.0, 1, 4, jitter=False, dtype=np.float64)
    assert np.array_equal(t[0], [0.125, 0.375, 0.625, 0.875])


def test_stratified_jitter_stays_in_bins():
    rng = np.random.default_rng(0)
    t = sample_stratified(2.0, 6.0, 10_000, 8, jitter=True, rng=rng, dtype=np.float64)
    edges = np.linspace(2.0, 6.0, 9)
    assert np.all(t >= edges[:-1]) and np.all(t <= edges[1:])


def test_stratified_jitter_mean_is_bin_midpoint():
    rng = np.random.default_rng(1)
    n_trials = 100_000
    t = sample_stratified(0.0, 1.0, n_trials, 4, jitter=True, rng=rng, dtype=np.float64)
    sigma = 0.25 / math.sqrt(12.0) / math.sqrt(n_trials)
    assert np.all(np.abs(t.mean(axis=0) - [0.125, 0.375, 0.625, 0.875]) <= 4 * sigma)


def test_stratified_argument_checks():
    with pytest.raises(ContractViolation):
        sample_stratified(0.0, 1.0, 1, 1, jitter=False)
    with pytest.raises(ContractViolation):
        sample_stratified(0.0, 1.0, 1, 4, jitter=True)


def test_composite_empty_space_is_background():
    rgb = np.random.default_rng(0).uniform(size=(3, 5, 3))
    color, weights, remaining, _ = composite(rgb, np.zeros((3, 5)), np.full((3, 5), 0.1))
    assert not weights.any()
    assert np.array_equal(color, np.ones((3, 3)))
    assert np.array_equal(remaining, np.ones(3))

    black, _, _, _ = composite(rgb, np.zeros((3, 5)), np.full((3, 5), 0.1), False)
    assert not black.any()


def test_composite_opaque_sample():
    color, weights, remaining, _ = composite(
        np.array([[[1.0, 0.0, 0.0]]]), np.array([[20.0]]), np.array([[1.0]])
    )
    np.testing.assert_allclose(color[0], [1.0, 0.0, 0.0], atol=1e-8)
    assert weights[0, 0] == pytest.approx(1.0, abs=1e-8)


def test_composite_homogeneous_medium_closed_form():
    n = 256
    c = np.array([0.2, 0.4, 0.6])
    rgb = np.tile(c, (1, n, 1))
    sigma = np.full((1, n), 1.5)
    delta = np.full((1, n), 2.0 / n)
    color, _, _, _ = composite(rgb, sigma, delta)
    expected = c * (1 - math.exp(-3.0)) + math.exp(-3.0)
    np.testing.assert_allclose(color[0], expected, rtol=0.01)


def _smooth_medium_color(n: int) -> np.ndarray:
    h = 2.0 / n
    t = (np.arange(n) + 0.5) * h
    sigma = (1.0 + np.sin(3.0 * t))[None]
    rgb = np.stack([0.5 + 0.4 * np.cos(t), 0.3 + 0.2 * t, np.full_like(t, 0.7)], axis=-1)[None]
    color, _, _, _ = composite(rgb, sigma, np.full((1, n), h))
    return color[0]


def test_quadrature_error_shrinks_with_samples():
    reference = _smooth_medium_color(2**15)
    errors = [np.abs(_smooth_medium_color(n) - reference).max() for n in (64, 128, 256, 512)]
    assert all(a > b for a, b in zip(errors, errors[1:], strict=False))
    assert errors[-1] < 1e-4


@settings(max_examples=50)
@given(
    arrays(np.float64, (2, 6), elements={"min_value": 0.0, "max_value": 50.0}),
    arrays(np.float64, (2, 6), elements={"min_value": 1e-3, "max_value": 1.0}),
)
def test_weights_and_remaining_partition_unity(sigma, delta):
    rgb = np.full((2, 6, 3), 0.3)
    _, weights, remaining, _ = composite(rgb, sigma, delta)
    assert np.all(weights >= 0)
    np.testing.assert_allclose(weights.sum(axis=-1) + remaining, 1.0, atol=1e-10)


def test_composite_backward_matches_finite_differences():
    rng = np.random.default_rng(2)
    rgb = rng.uniform(size=(2, 5, 3))
    sigma = rng.uniform(0.1, 2.0, size=(2, 5))
    delta = rng.uniform(0.1, 0.5, size=(2, 5))
    upstream = rng.normal(size=(2, 3))

    def f(params):
        color, _, _, cache = composite(params["rgb"], params["sigma"], delta)
        d_rgb, d_sigma = composite_backward(cache, upstream)
        return float(np.sum(color * upstream)), {"rgb": d_rgb, "sigma": d_sigma}

    assert grad_check(f, {"rgb": rgb, "sigma": sigma}, eps=1e-6) <= 1e-5


def test_sample_deltas_end_with_sentinel():
    deltas = sample_deltas(np.array([[1.0, 1.5, 2.5]]))
    assert np.array_equal(deltas, [[0.5, 1.0, DELTA_SENTINEL]])


@pytest.mark.parametrize("dtype", [np.float32, np.float64])
def test_merge_samples_separates_ties(dtype):
    coarse = np.array([[2.0, 3.0, 4.0]], dtype=dtype)
    extra = np.array([[3.0, 3.0, 2.5]], dtype=dtype)

    t = merge_samples(coarse, extra)

    assert t.dtype == dtype
    assert t.shape == (1, 6)
    assert np.all(np.diff(t, axis=-1) > 0)
    np.testing.assert_allclose(t, [[2.0, 2.5, 3.0, 3.0, 3.0, 4.0]], rtol=1e-6)
    assert np.all(sample_deltas(t) > 0)


def test_bin_edges_cover_range():
    edges = bin_edges(np.array([[1.0, 2.0, 4.0]]), 0.0, 5.0)
    assert np.array_equal(edges, [[0.0, 1.5, 3.0, 5.0]])


def test_importance_one_hot_weights():
    edges = np.tile(np.linspace(2.0, 6.0, 9), (3, 1))
    weights = np.zeros((3, 8))
    weights[:, 5] = 1e4
    t = sample_importance(edges, weights, 64, np.random.default_rng(0))
    assert np.all((t >= edges[0, 5]) & (t <= edges[0, 6]))
    t_det = sample_importance(edges, weights, 64, deterministic=True)
    assert np.all((t_det >= edges[0, 5]) & (t_det <= edges[0, 6]))


@pytest.mark.parametrize("scale", [1.0, 0.0])
def test_importance_uniform_weights_give_uniform_samples(scale):
    edges = np.linspace(0.0, 1.0, 9)[None]
    weights = np.full((1, 8), scale)
    t = sample_importance(edges, weights, 100_000, np.random.default_rng(3))
    assert kstest(t[0], "uniform").statistic < 0.02


def test_importance_deterministic_quantiles_are_reproducible():
    edges = np.tile(np.linspace(0.0, 1.0, 5), (2, 1))
    weights = np.array([[1.0, 2.0, 3.0, 4.0], [4.0, 3.0, 2.0, 1.0]])
    a = sample_importance(edges, weights, 16, deterministic=True)
    b = sample_importance(edges, weights, 16, deterministic=True)
    assert np.array_equal(a, b)
    assert np.all((a >= 0.0) & (a <= 1.0))


def test_importance_argument_checks():
    with pytest.raises(ContractViolation):
        sample_importance(np.zeros((1, 2)), np.zeros((1, 1)), 4, deterministic=True)
    with pytest.raises(ContractViolation):
        sample_importance(np.zeros((1, 4)), np.ones((1, 3)), 4)


@given(st.integers(1, 50), st.integers(1, 20))
def test_chunk_slices_partition(n, size):
    slices = chunk_slices(n, size)
    covered = np.concatenate([np.arange(n)[s] for s in slices])
    assert np.array_equal(covered, np.arange(n))
    assert all(s.stop - s.start <= size for s in slices)


def _rays(n: int = 6, seed: int = 0, dtype=np.float32) -> Rays:
    rng = np.random.default_rng(seed)
    origins = np.tile([0.0, 0.0, 4.0], (n, 1)) + rng.normal(scale=0.1, size=(n, 3))
    directions = np.tile([0.0, 0.0, -1.0], (n, 1)) + rng.normal(scale=0.1, size=(n, 3))
    directions /= np.linalg.norm(directions, axis=-1, keepdims=True)
    return Rays(origins=origins.astype(dtype), directions=directions.astype(dtype))


def test_identity_projection_render_matches_plain_render(make_fields, tiny_opts):
    with_proj = make_fields(seed=1, projection=True)
    plain = with_proj.model_copy(update={"projection": None})
    rays = _rays()
    a = render_rays(rays, with_proj, tiny_opts, np.random.default_rng(5))
    b = render_rays(rays, plain, tiny_opts, np.random.default_rng(5))
    assert np.array_equal(a.coarse_color, b.coarse_color)
    assert np.array_equal(a.fine_color, b.fine_color)
    assert np.array_equal(a.depth, b.depth)


def test_zero_fields_render_background(make_fields, tiny_opts):
    fields = _zero_fields(make_fields(seed=1))
    coarse, fine, weights = render_ray(_rays(1), fields, tiny_opts, np.random.default_rng(0))
    assert np.array_equal(coarse, np.ones(3))
    assert np.array_equal(fine, np.ones(3))
    assert not weights.any()


def test_render_shapes_and_ranges(make_fields, tiny_opts):
    fields = make_fields(seed=2)
    result = render_rays(_rays(4), fields, tiny_opts, np.random.default_rng(0))
    n_total = tiny_opts.n_coarse + tiny_opts.n_fine
    assert result.coarse_color.shape == (4, 3)
    assert result.fine_weights.shape == (4, n_total)
    assert np.all(np.diff(result.fine_t, axis=-1) >= 0)
    assert np.all((result.fine_color >= 0) & (result.fine_color <= 1 + 1e-6))
    assert np.all(result.depth >= 0)


def test_render_backward_requires_cache(make_fields, tiny_opts):
    fields = make_fields()
    result = render_rays(_rays(2), fields, tiny_opts, np.random.default_rng(0))
    with pytest.raises(ValueError):
        render_backward(fields, result, np.zeros((2, 3)), np.zeros((2, 3)), {})


def test_render_gradient_32_bit_agrees_with_64_bit(make_fields):
    opts = RenderOptions(n_coarse=8, n_fine=0, jitter=False)
    fields64 = make_fields(seed=3, precision="float64", projection=True)
    fields32 = fields64.astype(np.float32)
    gt = np.random.default_rng(1).uniform(size=(2, 3))

    def grads_for(fields, dtype):
        rays = _rays(2, seed=4, dtype=dtype)
        result = render_rays(rays, fields, opts, keep_cache=True)
        grads = {name: zeros_like(group) for name, group in fields.groups().items()}
        render_backward(
            fields, result, 2 * (result.coarse_color - gt), 2 * (result.fine_color - gt), grads
        )
        return grads

    g64 = grads_for(fields64, np.float64)
    g32 = grads_for(fields32, np.float32)
    for group, tensors in g64.items():
        for name, value in tensors.items():
            scale = max(np.abs(value).max(), 1e-3)
            np.testing.assert_allclose(g32[group][name], value, atol=1e-3 * scale)


def test_render_image_zero_density_is_white(make_fields, tiny_opts):
    fields = _zero_fields(make_fields(seed=1))
    cam = _camera(width=6, height=4, c2w=look_at(np.array([0.0, -4.0, 0.0])))
    image, depth = render_image(cam, fields, tiny_opts, chunk=7)
    assert image.width == 6 and image.height == 4
    assert np.array_equal(image.pixels, np.ones((4, 6, 3)))
    assert depth.shape == (4, 6)


def test_render_image_is_chunk_and_thread_independent(make_fields, tiny_opts):
    fields = make_fields(seed=2, projection=True)
    cam = _camera(width=8, height=8, c2w=look_at(np.array([0.0, -4.0, 1.0])))
    serial, _ = render_image(cam, fields, tiny_opts, chunk=64, threads=1)
    parallel, _ = render_image(cam, fields, tiny_opts, chunk=5, threads=3)
    np.testing.assert_allclose(parallel.pixels, serial.pixels, atol=1e-6)
    again, _ = render_image(cam, fields, tiny_opts, chunk=5, threads=3)
    assert np.array_equal(again.pixels, parallel.pixels)


def test_importance_samples_on_coarse_positions_keep_t_increasing(make_fields):
    opts = RenderOptions(n_coarse=8, n_fine=8, jitter=False)
    rays = _rays(3)

    def on_coarse_positions(edges, weights, n_fine, rng=None, deterministic=False):
        return sample_stratified(rays.t_near, rays.t_far, len(rays), n_fine, False)

    with patch("src.rendering.renderer.sample_importance", side_effect=on_coarse_positions):
        result = render_rays(rays, make_fields(seed=2), opts)

    assert result.fine_t.shape == (3, 16)
    assert np.all(np.diff(result.fine_t, axis=-1) > 0)
    assert np.all(np.isfinite(result.fine_color))
