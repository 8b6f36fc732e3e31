from typing import List

import numpy as np

from ..exceptions import TrainingAbortedError
from ..types import AdamState


def adam_step(params: List[np.ndarray], grads: List[np.ndarray], state: AdamState, lr: float):
    """One bias-corrected Adam update, applied in place.

    Rows whose gradient is entirely zero keep both their parameters and
    their moment estimates untouched; the step counter is global.
    """
    for index, (param, grad) in enumerate(zip(params, grads)):
        if param.shape != grad.shape:
            raise ValueError(f"Gradient {index} has shape {grad.shape}, expected {param.shape}")
        if not np.all(np.isfinite(grad)):
            bad = np.argwhere(~np.isfinite(grad))
            raise TrainingAbortedError(
                f"Non-finite gradient in parameter {index}",
                diagnostics={
                    "parameter": index,
                    "step": state.step,
                    "non_finite_entries": int(bad.shape[0]),
                    "first_entry": bad[0].tolist(),
                },
            )

    state.step += 1
    correction1 = 1.0 - state.beta1 ** state.step
    correction2 = 1.0 - state.beta2 ** state.step

    for param, grad, m, v in zip(params, grads, state.m, state.v):
        g2d = grad.reshape(grad.shape[0], -1)
        rows = np.flatnonzero(np.any(g2d != 0, axis=1))
        if rows.shape[0] == 0:
            continue
        g = grad[rows]
        m[rows] = state.beta1 * m[rows] + (1.0 - state.beta1) * g
        v[rows] = state.beta2 * v[rows] + (1.0 - state.beta2) * g * g
        m_hat = m[rows] / correction1
        v_hat = v[rows] / correction2
        param[rows] -= lr * m_hat / (np.sqrt(v_hat) + state.eps)

    return params, state
