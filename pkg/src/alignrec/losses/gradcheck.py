from typing import Callable, Tuple

import numpy as np

from ..exceptions import NonFiniteLossError


def finite_difference_check(
    loss_fn: Callable[[np.ndarray], Tuple[float, np.ndarray]],
    params: np.ndarray,
    epsilon: float = 1e-5,
) -> float:
    """Compares the analytic gradient of `loss_fn` with central differences.

    Args:
        loss_fn: Maps a flat parameter vector to (loss, gradient).
        params: Point at which to check.
        epsilon: Step size, within [1e-6, 1e-3].

    Returns:
        float: max_i |g_i - g_hat_i| / max(1, |g_i|, |g_hat_i|).
    """
    if not 1e-6 <= epsilon <= 1e-3:
        raise ValueError(f"epsilon must be within [1e-6, 1e-3], got {epsilon}")

    x = np.array(params, dtype=np.float64).ravel()
    value, grad = loss_fn(x.copy())
    if not np.isfinite(value):
        raise NonFiniteLossError(f"Loss is not finite at the check point: {value}")
    grad = np.asarray(grad, dtype=np.float64).ravel()

    numeric = np.empty_like(x)
    for i in range(x.shape[0]):
        original = x[i]
        x[i] = original + epsilon
        plus = loss_fn(x.copy())[0]
        x[i] = original - epsilon
        minus = loss_fn(x.copy())[0]
        x[i] = original
        if not (np.isfinite(plus) and np.isfinite(minus)):
            raise NonFiniteLossError(f"Loss is not finite around coordinate {i}")
        numeric[i] = (plus - minus) / (2.0 * epsilon)

    scale = np.maximum(1.0, np.maximum(np.abs(grad), np.abs(numeric)))
    return float(np.max(np.abs(grad - numeric) / scale))
