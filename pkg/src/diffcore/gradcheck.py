"""
Finite-difference verification of analytic gradients.
"""

import logging
from collections.abc import Callable

import numpy as np

from src.diffcore.params import ParamSet, cast
from src.errors import ContractViolation, GradientCheckError

logger = logging.getLogger("knerf-gradcheck")

LossAndGrad = Callable[[ParamSet], tuple[float, ParamSet]]


def grad_check(
    f: LossAndGrad,
    params: ParamSet,
    eps: float = 1e-4,
    reference_dtype: type | None = None,
) -> float:
    """Compare analytic gradients against central differences.

    Args:
        f: Returns ``(value, grads)`` for a parameter set; ``grads`` must be
            congruent with ``params`` (missing keys count as zero gradient)
        params: Point of evaluation; perturbed in place and restored
        eps: Central-difference step
        reference_dtype: When set, the differences are taken on a copy of
            ``params`` cast to this dtype, so a 32-bit analytic gradient can
            be checked against a 64-bit numeric one

    Returns:
        Max over all scalar parameters of
        ``|analytic - numeric| / max(|analytic|, |numeric|, 1e-8)``
    """
    if eps <= 0:
        raise ContractViolation(f"eps must be positive, got {eps}")

    _, analytic = f(params)
    point = params if reference_dtype is None else cast(params, reference_dtype)
    worst = 0.0
    worst_at = ""
    for name, value in point.items():
        grad = analytic.get(name)
        flat = value.reshape(-1)
        for i in range(flat.size):
            original = flat[i]
            flat[i] = original + eps
            f_plus = float(f(point)[0])
            flat[i] = original - eps
            f_minus = float(f(point)[0])
            flat[i] = original
            if not (np.isfinite(f_plus) and np.isfinite(f_minus)):
                raise GradientCheckError(name, i, "Non-finite function value")
            numeric = (f_plus - f_minus) / (2.0 * eps)
            a = 0.0 if grad is None else float(grad.reshape(-1)[i])
            err = abs(a - numeric) / max(abs(a), abs(numeric), 1e-8)
            if err > worst:
                worst = err
                worst_at = f"{name}[{i}]"
    logger.debug(f"grad_check max relative error {worst:.3e} at {worst_at or '-'}")
    return worst
