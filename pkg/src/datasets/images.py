"""
Float RGB image buffers and 8-bit PNG encode/decode.
"""

from pathlib import Path

import numpy as np
from PIL import Image
from pydantic import BaseModel, ConfigDict, Field, field_validator

from src.errors import DatasetError


class ImageBuffer(BaseModel):
    """An RGB image with channel values in [0, 1]."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    pixels: np.ndarray = Field(description="(H, W, 3) float RGB")

    @field_validator("pixels")
    @classmethod
    def _check_pixels(cls, value: np.ndarray) -> np.ndarray:
        if value.ndim != 3 or value.shape[-1] != 3:
            raise ValueError(f"Image pixels must be (H, W, 3), got {value.shape}")
        if value.size and (value.min() < 0.0 or value.max() > 1.0):
            raise ValueError("Image channel values must lie in [0, 1]")
        return value

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


def to_uint8(pixels: np.ndarray) -> np.ndarray:
    return np.round(np.clip(pixels, 0.0, 1.0) * 255.0).astype(np.uint8)


def write_png(image: ImageBuffer, path: Path) -> None:
    """Write an RGBA8 PNG with opaque alpha."""
    rgb = to_uint8(image.pixels)
    alpha = np.full(rgb.shape[:2] + (1,), 255, dtype=np.uint8)
    Image.fromarray(np.concatenate([rgb, alpha], axis=-1)).save(path)


def write_gray_png(values: np.ndarray, path: Path) -> None:
    Image.fromarray(to_uint8(values)).save(path)


def composite_over_white(rgba: np.ndarray) -> np.ndarray:
    """``rgb·α + (1 − α)`` for float RGBA in [0, 1]."""
    rgb, alpha = rgba[..., :3], rgba[..., 3:4]
    return rgb * alpha + (1.0 - alpha)


def read_png(path: Path, white_background: bool = True) -> ImageBuffer:
    """Read an RGB or RGBA PNG; RGBA is composited over white when requested."""
    try:
        with Image.open(path) as img:
            mode = "RGBA" if img.mode in ("RGBA", "LA", "P") else "RGB"
            data = np.asarray(img.convert(mode), dtype=np.float64) / 255.0
    except FileNotFoundError as e:
        raise DatasetError(f"Image not found: {path}") from e
    except OSError as e:
        raise DatasetError(f"Cannot decode image {path}: {e!s}") from e
    if data.shape[-1] == 4:
        data = composite_over_white(data) if white_background else data[..., :3]
    return ImageBuffer(pixels=data)
