"""
Quadrature points along rays: stratified coarse samples and inverse-CDF
importance samples from coarse weights.
"""

import numpy as np

from src.constants import DELTA_SENTINEL
from src.errors import ContractViolation

WEIGHT_FLOOR = 1e-5


def sample_stratified(
    t_near: float,
    t_far: float,
    n_rays: int,
    n: int,
    jitter: bool,
    rng: np.random.Generator | None = None,
    dtype: type = np.float32,
) -> np.ndarray:
    """``(n_rays, n)`` distances, one per equal bin of ``[t_near, t_far]``.

    Bin midpoints without jitter; uniform within each bin with jitter.
    """
    if n < 2:
        raise ContractViolation(f"Stratified sampling needs n >= 2, got {n}")
    edges = np.linspace(t_near, t_far, n + 1)
    lower, width = edges[:-1], edges[1:] - edges[:-1]
    if jitter:
        if rng is None:
            raise ContractViolation("Jittered sampling requires an rng")
        u = rng.random((n_rays, n))
    else:
        u = np.full((n_rays, n), 0.5)
    return (lower + u * width).astype(dtype)


def bin_edges(t: np.ndarray, t_near: float, t_far: float) -> np.ndarray:
    """Bin edges owning each sample: near, midpoints between samples, far."""
    mids = 0.5 * (t[..., 1:] + t[..., :-1])
    near = np.full(t.shape[:-1] + (1,), t_near, dtype=t.dtype)
    far = np.full(t.shape[:-1] + (1,), t_far, dtype=t.dtype)
    return np.concatenate([near, mids, far], axis=-1)


def sample_importance(
    t_bins: np.ndarray,
    weights: np.ndarray,
    n_fine: int,
    rng: np.random.Generator | None = None,
    deterministic: bool = False,
) -> np.ndarray:
    """Inverse-CDF samples from the piecewise-constant density ∝ weights.

    Args:
        t_bins: ``(R, B + 1)`` ascending bin edges
        weights: ``(R, B)`` non-negative bin weights; a 1e-5 floor is added so
            all-zero weights fall back to uniform
        n_fine: Samples per ray
        rng: Source of uniforms when not deterministic
        deterministic: Use evenly spaced quantiles instead of random uniforms

    Returns:
        ``(R, n_fine)`` distances, unsorted
    """
    if t_bins.shape[-1] < 3 or t_bins.shape[-1] != weights.shape[-1] + 1:
        raise ContractViolation(
            f"Need at least 2 bins with matching edges, got edges {t_bins.shape}, "
            f"weights {weights.shape}"
        )
    n_rays = weights.shape[0]
    w = weights.astype(np.float64) + WEIGHT_FLOOR
    pdf = w / w.sum(axis=-1, keepdims=True)
    cdf = np.concatenate([np.zeros((n_rays, 1)), np.cumsum(pdf, axis=-1)], axis=-1)
    cdf[:, -1] = 1.0

    if deterministic:
        quantiles = np.linspace(0.0, 1.0, n_fine, endpoint=False) + 0.5 / n_fine
        u = np.broadcast_to(quantiles, (n_rays, n_fine))
    else:
        if rng is None:
            raise ContractViolation("Random importance sampling requires an rng")
        u = rng.random((n_rays, n_fine))

    # Offsetting each row by 2·row keeps rows disjoint in one flat search
    offset = 2.0 * np.arange(n_rays)[:, None]
    flat = np.searchsorted((cdf + offset).ravel(), (u + offset).ravel(), side="right")
    idx = flat.reshape(n_rays, n_fine) - np.arange(n_rays)[:, None] * cdf.shape[-1]
    above = np.clip(idx, 1, cdf.shape[-1] - 1)
    below = above - 1
    cdf_lo = np.take_along_axis(cdf, below, axis=-1)
    cdf_hi = np.take_along_axis(cdf, above, axis=-1)
    bins64 = t_bins.astype(np.float64)
    t_lo = np.take_along_axis(bins64, below, axis=-1)
    t_hi = np.take_along_axis(bins64, above, axis=-1)
    denom = cdf_hi - cdf_lo
    denom = np.where(denom < 1e-12, 1.0, denom)
    frac = np.clip((u - cdf_lo) / denom, 0.0, 1.0)
    return (t_lo + frac * (t_hi - t_lo)).astype(t_bins.dtype)


def merge_samples(t_coarse: np.ndarray, t_extra: np.ndarray) -> np.ndarray:
    """Sorted union of both sample sets, strictly increasing along each ray.

    A tie moves the later sample up by one ulp, so no interval has zero length.
    """
    t = np.sort(np.concatenate([t_coarse, t_extra], axis=-1), axis=-1)
    for i in range(1, t.shape[-1]):
        t[..., i] = np.maximum(t[..., i], np.nextafter(t[..., i - 1], np.inf))
    return t


def sample_deltas(t: np.ndarray) -> np.ndarray:
    """``δ_i = t_{i+1} − t_i`` with the sentinel on the last sample."""
    last = np.full(t.shape[:-1] + (1,), DELTA_SENTINEL, dtype=t.dtype)
    return np.concatenate([np.diff(t, axis=-1), last], axis=-1)
