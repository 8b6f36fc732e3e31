from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy.spatial.distance import cdist, pdist

from ..embeddings import l2_normalize_rows, l2_normalize_rows_backward
from ..exceptions import DegenerateBandwidthError, SamplingError


def median_heuristic_gamma(points: np.ndarray) -> float:
    """1 / median pairwise squared distance over distinct unordered pairs."""
    points = np.asarray(points, dtype=np.float64)
    if points.shape[0] < 2:
        raise DegenerateBandwidthError("The median heuristic needs at least two points")
    median = float(np.median(pdist(points, "sqeuclidean")))
    if not median > 0:
        raise DegenerateBandwidthError("Median pairwise distance is zero")
    return 1.0 / median


def _kernel(a: np.ndarray, b: np.ndarray, gamma: float) -> np.ndarray:
    return np.exp(-gamma * cdist(a, b, "sqeuclidean"))


def mmd_sq(X: np.ndarray, Y: np.ndarray, gamma: float) -> float:
    """Squared MMD between two samples under the Gaussian kernel exp(-gamma |a - b|^2).

    This is the V-statistic (diagonal terms included), i.e. the squared RKHS
    distance between the two empirical mean embeddings, so it is never
    negative beyond round-off.
    """
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    return float(
        _kernel(X, X, gamma).mean() - 2.0 * _kernel(X, Y, gamma).mean() + _kernel(Y, Y, gamma).mean()
    )


def mmd_sq_grad(X: np.ndarray, Y: np.ndarray, gamma: float) -> Tuple[float, np.ndarray]:
    """mmd_sq and its gradient w.r.t. X, with Y held constant."""
    n, m = X.shape[0], Y.shape[0]
    Kxx = _kernel(X, X, gamma)
    Kxy = _kernel(X, Y, gamma)
    value = float(Kxx.mean() - 2.0 * Kxy.mean() + _kernel(Y, Y, gamma).mean())

    grad = -(4.0 * gamma / (n * n)) * (Kxx.sum(axis=1)[:, None] * X - Kxx @ X)
    grad += (4.0 * gamma / (n * m)) * (Kxy.sum(axis=1)[:, None] * X - Kxy @ Y)
    return value, grad


@dataclass(eq=False)
class AlignmentAnchor:
    """Per-step constants of the alignment term.

    The popular side of each MMD is frozen: its normalized representations,
    the bandwidths, and the layer-0 rows of the whole popular group are
    captured once per step and treated as constants.
    """

    user_tail: np.ndarray
    item_tail: np.ndarray
    user_pop_reps: np.ndarray
    item_pop_reps: np.ndarray
    gamma_user: float
    gamma_item: float
    pinned_users: np.ndarray
    pinned_items: np.ndarray
    pinned_user_rows: np.ndarray
    pinned_item_rows: np.ndarray
    sides: Tuple[bool, bool] = (True, True)


def _bandwidth(tail_reps, pop_reps, kernel) -> float:
    if kernel.bandwidth_rule == "fixed":
        return kernel.gamma
    try:
        return median_heuristic_gamma(np.vstack([tail_reps, pop_reps]))
    except DegenerateBandwidthError:
        return 1.0


def make_alignment_anchor(user_emb, item_emb, user_reps, item_reps, batch, groups, kernel,
                          sides: Tuple[bool, bool] = (True, True)) -> AlignmentAnchor:
    for name in ("align_users_pop", "align_users_tail", "align_items_pop", "align_items_tail"):
        if getattr(batch, name).shape[0] == 0:
            raise SamplingError(f"Alignment sample {name} is empty")

    user_pop_reps = l2_normalize_rows(user_reps[batch.align_users_pop])
    item_pop_reps = l2_normalize_rows(item_reps[batch.align_items_pop])
    user_tail_reps = l2_normalize_rows(user_reps[batch.align_users_tail])
    item_tail_reps = l2_normalize_rows(item_reps[batch.align_items_tail])

    popular_users = groups.popular_users
    popular_items = groups.popular_items
    return AlignmentAnchor(
        user_tail=batch.align_users_tail,
        item_tail=batch.align_items_tail,
        user_pop_reps=user_pop_reps,
        item_pop_reps=item_pop_reps,
        gamma_user=_bandwidth(user_tail_reps, user_pop_reps, kernel),
        gamma_item=_bandwidth(item_tail_reps, item_pop_reps, kernel),
        pinned_users=popular_users,
        pinned_items=popular_items,
        pinned_user_rows=user_emb[popular_users].copy(),
        pinned_item_rows=item_emb[popular_items].copy(),
        sides=tuple(sides),
    )


def alignment_loss(user_reps: np.ndarray, item_reps: np.ndarray, anchor: AlignmentAnchor):
    """Group-alignment: the mean over the enabled sides of MMD^2 between the
    tail sample and the frozen popular sample, on normalized rows.

    With both sides enabled this is half the sum of the user-side and
    item-side terms.

    Returns:
        tuple: (loss, grad w.r.t. user_reps, grad w.r.t. item_reps); the
        gradients are nonzero only on the sampled tail rows.
    """
    if anchor.user_tail.shape[0] == 0 or anchor.item_tail.shape[0] == 0:
        raise SamplingError("Alignment tail sample is empty")
    if not any(anchor.sides):
        raise ValueError("At least one side must be regularized")
    weight = 1.0 / sum(bool(s) for s in anchor.sides)

    grads = []
    total = 0.0
    for enabled, reps, tail, pop_reps, gamma in (
        (anchor.sides[0], user_reps, anchor.user_tail, anchor.user_pop_reps, anchor.gamma_user),
        (anchor.sides[1], item_reps, anchor.item_tail, anchor.item_pop_reps, anchor.gamma_item),
    ):
        grad = np.zeros_like(reps)
        grads.append(grad)
        if not enabled:
            continue
        raw = reps[tail]
        value, g_norm = mmd_sq_grad(l2_normalize_rows(raw), pop_reps, gamma)
        np.add.at(grad, tail, weight * l2_normalize_rows_backward(raw, g_norm))
        total += weight * value
    return total, grads[0], grads[1]
