"""
Alpha-compositing quadrature of the volume rendering integral.

With ``τ_i = σ_i·δ_i``: ``α_i = 1 − exp(−τ_i)``, transmittance
``T_i = exp(−Σ_{j<i} τ_j)`` (accumulated up to the current sample),
``w_i = T_i·α_i``, colour ``Σ w_i·c_i + bg·(1 − Σ w_i)`` with the remaining
transmittance taken as ``T_{S+1}``.
"""

from dataclasses import dataclass

import numpy as np


@dataclass
class CompositeCache:
    rgb: np.ndarray
    delta: np.ndarray
    weights: np.ndarray
    t_next: np.ndarray
    background: float
    remaining: np.ndarray


def composite(
    rgb: np.ndarray, sigma: np.ndarray, delta: np.ndarray, white_background: bool = True
) -> tuple[np.ndarray, np.ndarray, np.ndarray, CompositeCache]:
    """Composite ``(R, S, 3)`` colours with ``(R, S)`` densities and spacings.

    Returns:
        color ``(R, 3)``, weights ``(R, S)``, transmittance remaining ``(R,)``
        and the backward cache
    """
    tau = sigma * delta
    acc = np.cumsum(tau, axis=-1)
    t_next = np.exp(-acc)
    transmittance = np.concatenate([np.ones_like(acc[..., :1]), t_next[..., :-1]], axis=-1)
    alpha = 1.0 - np.exp(-tau)
    weights = transmittance * alpha
    # Equals 1 − Σ w_i; the product form keeps opaque rays at exactly zero
    remaining = t_next[..., -1]
    background = 1.0 if white_background else 0.0
    color = (weights[..., None] * rgb).sum(axis=-2) + background * remaining[..., None]
    cache = CompositeCache(
        rgb=rgb,
        delta=delta,
        weights=weights,
        t_next=t_next,
        background=background,
        remaining=remaining,
    )
    return color, weights, remaining, cache


def composite_backward(
    cache: CompositeCache, d_color: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Gradients w.r.t. per-sample rgb and sigma for upstream ``d_color (R, 3)``.

    ``∂C/∂τ_k = T_{k+1}·c_k − (Σ_{i>k} w_i·c_i + bg·(1 − Σ w))``.
    """
    d_rgb = cache.weights[..., None] * d_color[..., None, :]
    wc = cache.weights[..., None] * cache.rgb
    # Σ_{i>k} w_i c_i as an exclusive reverse cumulative sum
    suffix = np.cumsum(wc[..., ::-1, :], axis=-2)[..., ::-1, :] - wc
    tail = suffix + cache.background * cache.remaining[..., None, None]
    dC_dtau = cache.t_next[..., None] * cache.rgb - tail
    d_tau = (dC_dtau * d_color[..., None, :]).sum(axis=-1)
    return d_rgb, d_tau * cache.delta
