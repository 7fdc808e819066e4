import numpy as np

from src.errors import ContractViolation


def mse_loss(
    coarse: np.ndarray, fine: np.ndarray, gt: np.ndarray
) -> tuple[float, np.ndarray, np.ndarray]:
    """Summed squared colour error of both passes, averaged over the batch.

    Returns:
        The loss and its gradients with respect to ``coarse`` and ``fine``
    """
    if not coarse.shape == fine.shape == gt.shape:
        raise ContractViolation(
            f"Batch shapes differ: coarse {coarse.shape}, fine {fine.shape}, gt {gt.shape}"
        )
    n = max(len(gt), 1)
    rc = coarse - gt
    rf = fine - gt
    sq = np.sum(rc * rc, dtype=np.float64) + np.sum(rf * rf, dtype=np.float64)
    return float(sq) / n, (2.0 / n) * rc, (2.0 / n) * rf
