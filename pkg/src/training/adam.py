"""
Adam with bias correction and the exponential learning-rate schedule.
"""

import numpy as np
from pydantic import BaseModel, ConfigDict

from src.diffcore.params import ParamSet, all_finite, zeros_like
from src.errors import ContractViolation, NonFiniteGradientError, NonFiniteParameterError
from src.training.config import TrainConfig


class AdamState(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    m: ParamSet
    v: ParamSet
    t: int = 0

    @classmethod
    def fresh(cls, params: ParamSet) -> "AdamState":
        return cls(m=zeros_like(params), v=zeros_like(params))


def lr_schedule(iteration: int, cfg: TrainConfig) -> float:
    """``base_lr · 0.1^(iteration / decay_denominator)``."""
    if iteration < 0:
        raise ContractViolation(f"iteration must be non-negative, got {iteration}")
    return cfg.base_lr * 0.1 ** (iteration / cfg.decay_denominator)


def adam_step(
    params: ParamSet, grads: ParamSet, state: AdamState, lr: float, cfg: TrainConfig
) -> tuple[ParamSet, AdamState]:
    """Update ``params`` and ``state`` in place.

    Gradients are checked before the update and the updated parameters
    before they are committed, so a rejected step leaves parameters and
    moments as they were.

    Raises:
        NonFiniteGradientError: a gradient holds NaN or Inf
        NonFiniteParameterError: the update would make a parameter NaN or Inf
        ContractViolation: gradient keys or shapes differ from the parameters
    """
    for name, value in params.items():
        g = grads.get(name)
        if g is None or g.shape != value.shape:
            raise ContractViolation(f"Gradient for {name} missing or misshapen")
        if not np.all(np.isfinite(g)):
            raise NonFiniteGradientError(name)

    beta1, beta2 = cfg.betas
    t = state.t + 1
    bc1 = 1.0 - beta1**t
    bc2 = 1.0 - beta2**t
    m_new: ParamSet = {}
    v_new: ParamSet = {}
    updated: ParamSet = {}
    with np.errstate(over="ignore", invalid="ignore"):
        for name, value in params.items():
            g = grads[name]
            m_new[name] = beta1 * state.m[name] + (1.0 - beta1) * g
            v_new[name] = beta2 * state.v[name] + (1.0 - beta2) * (g * g)
            step = (lr / bc1) * m_new[name] / (np.sqrt(v_new[name] / bc2) + cfg.adam_eps)
            updated[name] = value - step
    if not all_finite(updated):
        bad = next(n for n, u in updated.items() if not np.all(np.isfinite(u)))
        raise NonFiniteParameterError(bad)

    state.t = t
    for name, value in params.items():
        np.copyto(state.m[name], m_new[name])
        np.copyto(state.v[name], v_new[name])
        np.copyto(value, updated[name])
    return params, state
