"""
Affine layers and activations with hand-derived backward passes.

All functions accept either a single vector ``x`` of shape ``(n,)`` or a
batch of row vectors of shape ``(N, n)``. Weight matrices are stored
``(out, in)``; batched backward passes sum parameter gradients over rows.
"""

from typing import Literal

import numpy as np

from src.errors import ContractViolation

Activation = Literal["relu", "sigmoid"]


def affine_forward(x: np.ndarray, W: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Return ``W·x + b`` for a vector or each row of a batch."""
    if W.ndim != 2 or b.shape != (W.shape[0],) or x.shape[-1] != W.shape[1]:
        raise ContractViolation(
            f"affine_forward shapes incompatible: x{x.shape}, W{W.shape}, b{b.shape}"
        )
    return x @ W.T + b


def affine_backward(
    x: np.ndarray, W: np.ndarray, dy: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return ``(dx, dW, db)`` with ``dx = Wᵀ·dy``, ``dW = dy⊗x``, ``db = dy``."""
    if dy.shape[-1] != W.shape[0] or x.shape[-1] != W.shape[1] or dy.shape[:-1] != x.shape[:-1]:
        raise ContractViolation(
            f"affine_backward shapes incompatible: x{x.shape}, W{W.shape}, dy{dy.shape}"
        )
    dx = dy @ W
    if dy.ndim == 1:
        return dx, np.outer(dy, x), dy.copy()
    return dx, dy.T @ x, dy.sum(axis=0)


def sigmoid(x: np.ndarray) -> np.ndarray:
    # tanh form is overflow-free for large |x|
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def act_forward(kind: Activation, x: np.ndarray) -> np.ndarray:
    if kind == "relu":
        return np.maximum(x, 0)
    if kind == "sigmoid":
        return sigmoid(x)
    raise ContractViolation(f"Unknown activation: {kind}")


def act_backward(kind: Activation, x: np.ndarray, dy: np.ndarray) -> np.ndarray:
    """Chain-rule product of the activation derivative at ``x`` with ``dy``."""
    if kind == "relu":
        return dy * (x > 0)
    if kind == "sigmoid":
        s = sigmoid(x)
        return dy * s * (1.0 - s)
    raise ContractViolation(f"Unknown activation: {kind}")


def init_affine(
    rng: np.random.Generator, fan_in: int, fan_out: int, dtype: type = np.float32
) -> tuple[np.ndarray, np.ndarray]:
    """Uniform ±sqrt(6/(fan_in+fan_out)) weights and zero bias."""
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    W = rng.uniform(-limit, limit, size=(fan_out, fan_in)).astype(dtype)
    return W, np.zeros(fan_out, dtype=dtype)
