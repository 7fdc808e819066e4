import json

import numpy as np
import pytest
from PIL import Image

from src.datasets.blender import DatasetManifest, Frame, load_dataset, save_dataset
from src.datasets.checkpoint import load_checkpoint, read_header, save_checkpoint
from src.datasets.images import ImageBuffer, read_png, write_png
from src.errors import CheckpointError, DatasetError
from src.rendering.camera import look_at
from src.training.persistence import load_fields, save_fields


def _rgba(path, value, size=(3, 2)):
    data = np.zeros((size[1], size[0], 4), dtype=np.uint8)
    data[...] = value
    Image.fromarray(data).save(path)


def _tiny_split(n=2, size=4, seed=0):
    rng = np.random.default_rng(seed)
    frames = [
        Frame(
            file_path=f"./train/r_{i}",
            transform_matrix=look_at(np.array([4.0, float(i), 1.0])).tolist(),
        )
        for i in range(n)
    ]
    images = [ImageBuffer(pixels=rng.uniform(size=(size, size, 3))) for _ in range(n)]
    return DatasetManifest(camera_angle_x=0.69, frames=frames), images


def test_transparent_pixels_load_as_white(tmp_path):
    _rgba(tmp_path / "clear.png", (0, 0, 0, 0))
    _rgba(tmp_path / "red.png", (255, 0, 0, 255))

    assert np.array_equal(read_png(tmp_path / "clear.png").pixels, np.ones((2, 3, 3)))
    red = read_png(tmp_path / "red.png").pixels
    assert np.array_equal(red[0, 0], [1.0, 0.0, 0.0])


def test_transparent_pixels_without_white_background(tmp_path):
    _rgba(tmp_path / "clear.png", (0, 0, 0, 0))
    assert not read_png(tmp_path / "clear.png", white_background=False).pixels.any()


def test_png_round_trip_is_within_one_level(tmp_path):
    image = ImageBuffer(pixels=np.random.default_rng(1).uniform(size=(6, 5, 3)))
    write_png(image, tmp_path / "img.png")
    back = read_png(tmp_path / "img.png")
    assert np.max(np.abs(back.pixels - image.pixels)) <= 1.0 / 255.0


def test_image_buffer_validation():
    with pytest.raises(ValueError):
        ImageBuffer(pixels=np.zeros((2, 2)))
    with pytest.raises(ValueError):
        ImageBuffer(pixels=np.full((2, 2, 3), 1.5))
    assert ImageBuffer(pixels=np.ones((3, 4, 3))).width == 4


def test_manifest_field_names_and_external_reading(tmp_path):
    manifest, images = _tiny_split()
    save_dataset(manifest, images, tmp_path, "train")

    payload = json.loads((tmp_path / "transforms_train.json").read_text())
    assert list(payload) == ["camera_angle_x", "frames"]
    assert all(list(f) == ["file_path", "transform_matrix"] for f in payload["frames"])
    for frame in payload["frames"]:
        with Image.open(tmp_path / (frame["file_path"] + ".png")) as img:
            assert img.mode == "RGBA"
            assert img.size == (4, 4)
        assert np.asarray(frame["transform_matrix"]).shape == (4, 4)


def test_load_dataset_round_trip(tmp_path):
    manifest, images = _tiny_split(n=3)
    save_dataset(manifest, images, tmp_path, "train")

    loaded_manifest, loaded = load_dataset(tmp_path, "train")

    assert loaded_manifest == manifest
    for a, b in zip(images, loaded, strict=True):
        assert np.max(np.abs(a.pixels - b.pixels)) <= 1.0 / 255.0


def test_saves_are_byte_identical(tmp_path):
    for run in ("a", "b"):
        manifest, images = _tiny_split(seed=4)
        save_dataset(manifest, images, tmp_path / run, "train")
    for name in ("transforms_train.json", "train/r_0.png", "train/r_1.png"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_missing_manifest(tmp_path):
    with pytest.raises(DatasetError):
        load_dataset(tmp_path, "train")


def test_malformed_manifest(tmp_path):
    frame = {"file_path": "x", "transform_matrix": [[1.0]]}
    payload = {"camera_angle_x": 0.7, "frames": [frame]}
    (tmp_path / "transforms_val.json").write_text(json.dumps(payload))
    with pytest.raises(DatasetError):
        load_dataset(tmp_path, "val")


def test_missing_frame_image(tmp_path):
    manifest, images = _tiny_split()
    save_dataset(manifest, images, tmp_path, "train")
    (tmp_path / "train" / "r_1.png").unlink()
    with pytest.raises(DatasetError):
        load_dataset(tmp_path, "train")


def test_frames_must_share_a_size(tmp_path):
    manifest, images = _tiny_split()
    images[1] = ImageBuffer(pixels=np.ones((5, 4, 3)))
    save_dataset(manifest, images, tmp_path, "train")
    with pytest.raises(DatasetError):
        load_dataset(tmp_path, "train")


def test_dataset_error_is_an_os_error():
    assert issubclass(DatasetError, OSError)


@pytest.fixture
def params():
    rng = np.random.default_rng(0)
    return {
        "layer.0.W": rng.normal(size=(4, 3)).astype(np.float32),
        "layer.0.b": rng.normal(size=4).astype(np.float32),
        "out.W": rng.normal(size=(1, 4)).astype(np.float32),
    }


def test_checkpoint_round_trip_is_bit_exact(tmp_path, params):
    path = tmp_path / "model.ckpt"
    save_checkpoint(params, path, {"stage": "pretrain", "seed": 42})

    loaded, hyper = load_checkpoint(path)

    assert list(loaded) == list(params)
    for name, value in params.items():
        assert loaded[name].dtype == np.float32
        assert np.array_equal(loaded[name], value)
    assert hyper == {"stage": "pretrain", "seed": 42}


def test_checkpoint_header_layout(tmp_path, params):
    path = tmp_path / "model.ckpt"
    save_checkpoint(params, path)

    raw = path.read_bytes()
    head, _, payload = raw.partition(b"\n\n")
    header = json.loads(head)
    assert list(header) == ["format_version", "tensors", "hyperparameters"]
    assert header["format_version"] == 1
    assert header["tensors"][0] == {"name": "layer.0.W", "shape": [4, 3]}
    assert len(payload) == 4 * (12 + 4 + 4)
    assert read_header(path)[0].tensors[2].name == "out.W"


def test_checkpoint_stores_float64_params_as_float32(tmp_path):
    path = tmp_path / "model.ckpt"
    save_checkpoint({"w": np.array([[0.1, 0.2]])}, path)

    loaded, _ = load_checkpoint(path)

    assert loaded["w"].dtype == np.float32
    assert np.array_equal(loaded["w"], np.array([[0.1, 0.2]], dtype=np.float32))


def test_empty_tensor_is_not_saved(tmp_path, params):
    path = tmp_path / "model.ckpt"
    with pytest.raises(CheckpointError, match="layer.1.W"):
        save_checkpoint({**params, "layer.1.W": np.zeros((0, 4))}, path)
    assert not path.exists()


def test_truncated_checkpoint_names_the_tensor(tmp_path, params):
    path = tmp_path / "model.ckpt"
    save_checkpoint(params, path)
    path.write_bytes(path.read_bytes()[:-4])

    with pytest.raises(CheckpointError, match="truncated in tensor out.W"):
        load_checkpoint(path)


def test_trailing_bytes_are_rejected(tmp_path, params):
    path = tmp_path / "model.ckpt"
    save_checkpoint(params, path)
    path.write_bytes(path.read_bytes() + b"\0\0\0\0")

    with pytest.raises(CheckpointError, match="payload"):
        load_checkpoint(path)


def test_unknown_version_is_rejected(tmp_path, params):
    path = tmp_path / "model.ckpt"
    save_checkpoint(params, path)
    path.write_bytes(path.read_bytes().replace(b'"format_version":1', b'"format_version":2', 1))

    with pytest.raises(CheckpointError, match="version 2"):
        load_checkpoint(path)


def test_missing_terminator_and_missing_file(tmp_path):
    path = tmp_path / "model.ckpt"
    path.write_bytes(b'{"format_version":1,"tensors":[]}')
    with pytest.raises(CheckpointError, match="terminator"):
        load_checkpoint(path)
    with pytest.raises(CheckpointError):
        load_checkpoint(tmp_path / "absent.ckpt")


def test_field_set_round_trip(tmp_path, make_fields):
    fields = make_fields(seed=3, projection=True)
    path = tmp_path / "fields.ckpt"
    save_fields(fields, path, {"stage": "project"})

    loaded, hyper = load_fields(path)

    assert hyper["stage"] == "project"
    assert loaded.encoding == fields.encoding
    for group, tensors in fields.groups().items():
        restored = loaded.groups()[group]
        assert list(restored) == list(tensors)
        for name, value in tensors.items():
            assert np.array_equal(restored[name], value)


def test_plain_checkpoint_is_not_a_field_set(tmp_path, params):
    path = tmp_path / "model.ckpt"
    save_checkpoint(params, path)
    with pytest.raises(CheckpointError):
        load_fields(path)
