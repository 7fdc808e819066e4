"""
MSE, PSNR and SSIM on float RGB images in [0, 1].
"""

import math

import numpy as np
from scipy.signal import convolve2d

from src.constants import PSNR_CAP_DB
from src.datasets.images import ImageBuffer
from src.errors import ContractViolation, MetricError

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_C1 = 0.01**2
SSIM_C2 = 0.03**2


def _check_sizes(a: ImageBuffer, b: ImageBuffer) -> None:
    if a.pixels.shape != b.pixels.shape:
        raise MetricError(f"Image sizes differ: {a.pixels.shape} vs {b.pixels.shape}")


def mse_image(a: ImageBuffer, b: ImageBuffer) -> float:
    _check_sizes(a, b)
    diff = a.pixels.astype(np.float64) - b.pixels.astype(np.float64)
    return float(np.mean(diff * diff))


def psnr(mse: float) -> float:
    """``-10·log10(mse)`` in dB; a perfect match reports the 99 dB cap."""
    if mse < 0 or math.isnan(mse):
        raise ContractViolation(f"mse must be non-negative, got {mse}")
    if mse == 0:
        return PSNR_CAP_DB
    return -10.0 * math.log10(mse)


def gaussian_window(size: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA) -> np.ndarray:
    x = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    g = np.exp(-(x * x) / (2.0 * sigma * sigma))
    g /= g.sum()
    return np.outer(g, g)


def ssim(a: ImageBuffer, b: ImageBuffer) -> float:
    """Mean structural similarity of the channel-mean grayscale images.

    Local statistics use an 11x11 Gaussian window (sigma 1.5) over valid
    positions only.

    Raises:
        MetricError: sizes differ or either side is smaller than the window
    """
    _check_sizes(a, b)
    if min(a.height, a.width) < SSIM_WINDOW:
        raise MetricError(
            f"SSIM needs images of at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {a.width}x{a.height}"
        )
    x = a.pixels.astype(np.float64).mean(axis=-1)
    y = b.pixels.astype(np.float64).mean(axis=-1)
    w = gaussian_window()

    def filt(img: np.ndarray) -> np.ndarray:
        return convolve2d(img, w, mode="valid")

    mu_x, mu_y = filt(x), filt(y)
    var_x = filt(x * x) - mu_x * mu_x
    var_y = filt(y * y) - mu_y * mu_y
    cov = filt(x * y) - mu_x * mu_y
    num = (2.0 * mu_x * mu_y + SSIM_C1) * (2.0 * cov + SSIM_C2)
    den = (mu_x * mu_x + mu_y * mu_y + SSIM_C1) * (var_x + var_y + SSIM_C2)
    return float(np.mean(num / den))
