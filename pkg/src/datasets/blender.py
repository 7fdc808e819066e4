"""
Blender-format datasets: ``transforms_<split>.json`` plus one PNG per frame.
"""

import json
import logging
from pathlib import Path
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from src.datasets.images import ImageBuffer, read_png, write_png
from src.errors import DatasetError

logger = logging.getLogger("knerf-datasets")

Split = Literal["train", "val", "test"]


class Frame(BaseModel):
    model_config = ConfigDict(extra="ignore")

    file_path: str = Field(description="Path relative to the dataset directory, '.png' implied")
    transform_matrix: list[list[float]] = Field(description="4x4 camera-to-world, row-major")

    @field_validator("transform_matrix")
    @classmethod
    def _check_matrix(cls, value: list[list[float]]) -> list[list[float]]:
        m = np.asarray(value, dtype=np.float64)
        if m.shape != (4, 4):
            raise ValueError(f"transform_matrix must be 4x4, got {m.shape}")
        R = m[:3, :3]
        if not np.allclose(R.T @ R, np.eye(3), atol=1e-4):
            raise ValueError("transform_matrix rotation block is not orthonormal")
        return value

    def c2w(self) -> np.ndarray:
        return np.asarray(self.transform_matrix, dtype=np.float64)


class DatasetManifest(BaseModel):
    model_config = ConfigDict(extra="ignore")

    camera_angle_x: float = Field(gt=0, description="Horizontal field of view in radians")
    frames: list[Frame]


def manifest_path(directory: Path, split: Split) -> Path:
    return directory / f"transforms_{split}.json"


def resolve_frame(directory: Path, frame: Frame) -> Path:
    path = directory / frame.file_path
    return path if path.suffix else path.with_suffix(".png")


def load_dataset(
    directory: Path, split: Split, white_background: bool = True
) -> tuple[DatasetManifest, list[ImageBuffer]]:
    """Load a split; every frame must exist and all frames must share one size."""
    path = manifest_path(Path(directory), split)
    try:
        manifest = DatasetManifest.model_validate_json(path.read_text())
    except FileNotFoundError as e:
        raise DatasetError(f"Manifest not found: {path}") from e
    except ValidationError as e:
        raise DatasetError(f"Malformed manifest {path}: {e!s}") from e

    images = [read_png(resolve_frame(path.parent, f), white_background) for f in manifest.frames]
    sizes = {(img.width, img.height) for img in images}
    if len(sizes) > 1:
        raise DatasetError(f"Frames in {path} disagree on image size: {sorted(sizes)}")
    logger.info(f"Loaded {len(images)} {split} frames from {path.parent}")
    return manifest, images


def save_dataset(
    manifest: DatasetManifest, images: list[ImageBuffer], directory: Path, split: Split
) -> None:
    """Write the manifest (stable key order, 4-space indent) and RGBA8 PNGs."""
    if len(images) != len(manifest.frames):
        raise DatasetError(
            f"{len(manifest.frames)} frames but {len(images)} images for split {split}"
        )
    directory = Path(directory)
    try:
        for frame, image in zip(manifest.frames, images, strict=True):
            target = resolve_frame(directory, frame)
            target.parent.mkdir(parents=True, exist_ok=True)
            write_png(image, target)
        payload = {
            "camera_angle_x": manifest.camera_angle_x,
            "frames": [
                {"file_path": f.file_path, "transform_matrix": f.transform_matrix}
                for f in manifest.frames
            ],
        }
        manifest_path(directory, split).write_text(json.dumps(payload, indent=4) + "\n")
    except OSError as e:
        raise DatasetError(f"Cannot write {split} split to {directory}: {e!s}") from e
