"""
Per-image metric reports and their tab-separated table form.
"""

from collections.abc import Sequence
from pathlib import Path

import numpy as np
from pydantic import BaseModel, Field

from src.datasets.images import ImageBuffer
from src.errors import MetricError
from src.metrics.image import mse_image, psnr, ssim


class ImageMetrics(BaseModel):
    name: str
    mse: float = Field(ge=0)
    psnr: float
    ssim: float


class MetricReport(BaseModel):
    """Means over a set of images plus the per-image breakdown."""

    mse: float = Field(ge=0, description="Mean of per-image MSE")
    psnr: float = Field(description="PSNR of the mean MSE")
    ssim: float = Field(description="Mean of per-image SSIM")
    images: list[ImageMetrics]

    def table(self) -> str:
        """One ``name mse psnr ssim`` line per image plus a ``mean`` line."""
        mean = ImageMetrics(name="mean", mse=self.mse, psnr=self.psnr, ssim=self.ssim)
        lines = [f"{r.name}\t{r.mse:.8f}\t{r.psnr:.4f}\t{r.ssim:.6f}" for r in [*self.images, mean]]
        return "\n".join(lines) + "\n"

    def write(self, path: Path) -> None:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(self.table())


def evaluate_images(
    names: Sequence[str], renders: Sequence[ImageBuffer], targets: Sequence[ImageBuffer]
) -> MetricReport:
    if not names:
        raise MetricError("Nothing to evaluate: empty image list")
    if not len(names) == len(renders) == len(targets):
        raise MetricError(
            f"Got {len(names)} names, {len(renders)} renders and {len(targets)} targets"
        )
    rows = []
    for name, render, target in zip(names, renders, targets, strict=True):
        mse = mse_image(render, target)
        rows.append(ImageMetrics(name=name, mse=mse, psnr=psnr(mse), ssim=ssim(render, target)))
    mean_mse = float(np.mean([r.mse for r in rows]))
    return MetricReport(
        mse=mean_mse,
        psnr=psnr(mean_mse),
        ssim=float(np.mean([r.ssim for r in rows])),
        images=rows,
    )
