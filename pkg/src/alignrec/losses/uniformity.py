from typing import Tuple

import numpy as np
from scipy.spatial.distance import pdist, squareform

from ..embeddings import l2_normalize_rows, l2_normalize_rows_backward
from ..exceptions import InsufficientPairsError


def uniformity_side(points: np.ndarray, t: float = 2.0) -> Tuple[float, np.ndarray]:
    """log of the mean Gaussian potential exp(-t |a - b|^2) over distinct pairs.

    Returns the value and its gradient w.r.t. `points` (taken as given, no
    normalization is applied here).
    """
    n = points.shape[0]
    if n < 2:
        raise InsufficientPairsError(f"Uniformity needs at least two points, got {n}")

    K = np.exp(-t * squareform(pdist(points, "sqeuclidean")))
    np.fill_diagonal(K, 0.0)
    pair_sum = K.sum() / 2.0
    value = float(np.log(pair_sum / (n * (n - 1) / 2.0)))
    grad = -(2.0 * t / pair_sum) * (K.sum(axis=1)[:, None] * points - K @ points)
    return value, grad


def uniformity_value(points: np.ndarray, t: float = 2.0) -> float:
    if points.shape[0] < 2:
        raise InsufficientPairsError(f"Uniformity needs at least two points, got {points.shape[0]}")
    return float(np.log(np.mean(np.exp(-t * pdist(points, "sqeuclidean")))))


def uniformity_loss(user_reps: np.ndarray, item_reps: np.ndarray, t: float = 2.0,
                    sides: Tuple[bool, bool] = (True, True)):
    """Global-uniformity over user and item rows, averaged over the enabled sides.

    Rows are L2-normalized first; gradients are returned w.r.t. the raw rows.
    A disabled side contributes nothing and gets a zero gradient.

    Returns:
        tuple: (loss, grad w.r.t. user_reps, grad w.r.t. item_reps)
    """
    if not any(sides):
        raise ValueError("At least one side must be regularized")
    weight = 1.0 / sum(bool(s) for s in sides)
    total = 0.0
    grads = []
    for enabled, reps in zip(sides, (user_reps, item_reps)):
        if not enabled:
            grads.append(np.zeros_like(reps))
            continue
        value, g = uniformity_side(l2_normalize_rows(reps), t)
        total += weight * value
        grads.append(weight * l2_normalize_rows_backward(reps, g))
    return total, grads[0], grads[1]
