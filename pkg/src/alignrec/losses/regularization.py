from typing import Tuple

import numpy as np


def l2_term(rows: np.ndarray) -> Tuple[float, np.ndarray]:
    """Sum of squared norms of the given rows, and its gradient 2 * rows."""
    rows = np.asarray(rows, dtype=np.float64)
    if rows.size == 0:
        return 0.0, np.zeros_like(rows)
    return float(np.sum(rows * rows)), 2.0 * rows
