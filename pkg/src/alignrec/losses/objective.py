from typing import Callable, Tuple

import numpy as np

from ..exceptions import InsufficientPairsError
from ..types import LossBreakdown
from .bpr import bpr_batch
from .mmd import AlignmentAnchor, alignment_loss
from .regularization import l2_term
from .uniformity import uniformity_loss


def total_loss(rec: float, align: float, uniform: float, l2: float,
               lambda1: float, lambda2: float, lam: float) -> LossBreakdown:
    if min(lambda1, lambda2, lam) < 0:
        raise ValueError("Loss weights must be non-negative")
    return LossBreakdown(
        rec=rec,
        align=align,
        uniform=uniform,
        l2=l2,
        total=rec + lambda1 * align + lambda2 * uniform + lam * l2,
        lambda1=lambda1,
        lambda2=lambda2,
        lam=lam,
    )


def _pin(emb: np.ndarray, rows: np.ndarray, values: np.ndarray) -> np.ndarray:
    pinned = emb.copy()
    pinned[rows] = values
    return pinned


def alignment_objective(backbone, user_emb: np.ndarray, item_emb: np.ndarray, anchor: AlignmentAnchor,
                        reps: Tuple[np.ndarray, np.ndarray] = None):
    """The alignment term and its gradient w.r.t. the layer-0 tables.

    Popular rows are held at their anchored values while propagating, and
    their gradient rows are exactly zero.
    """
    if backbone.is_identity:
        user_reps, item_reps = reps if reps is not None else (user_emb, item_emb)
    else:
        user_reps, item_reps = backbone.propagate(
            _pin(user_emb, anchor.pinned_users, anchor.pinned_user_rows),
            _pin(item_emb, anchor.pinned_items, anchor.pinned_item_rows),
        )
    value, grad_user, grad_item = alignment_loss(user_reps, item_reps, anchor)
    grad_user, grad_item = backbone.backpropagate(grad_user, grad_item)
    grad_user[anchor.pinned_users] = 0.0
    grad_item[anchor.pinned_items] = 0.0
    return value, grad_user, grad_item


def compute_objective(
    backbone,
    user_emb: np.ndarray,
    item_emb: np.ndarray,
    batch,
    lambda1: float,
    lambda2: float,
    lam: float,
    t: float = 2.0,
    anchor: AlignmentAnchor = None,
    reps: Tuple[np.ndarray, np.ndarray] = None,
    sides: Tuple[bool, bool] = (True, True),
):
    """Evaluates rec + lambda1 * align + lambda2 * uniform + lam * l2 on one batch.

    `backbone` maps layer-0 rows to final representations (`propagate`) and
    pulls gradients back (`backpropagate`). Alignment and uniformity run on
    normalized final representations, BPR on the raw ones, L2 on the
    layer-0 rows touched by the batch, divided by the batch size. `sides`
    switches the user and item halves of the uniformity term; the alignment
    sides travel with `anchor`.

    Returns:
        tuple: (LossBreakdown, grad w.r.t. user_emb, grad w.r.t. item_emb)
    """
    user_reps, item_reps = reps if reps is not None else backbone.propagate(user_emb, item_emb)
    n = max(len(batch), 1)

    rec, g_user, g_item = bpr_batch(user_reps, item_reps, batch.users, batch.pos_items, batch.neg_items)

    uniform = 0.0
    if lambda2 > 0:
        try:
            uniform, gu, gi = uniformity_loss(
                user_reps[batch.uniform_users], item_reps[batch.uniform_items], t, sides=sides
            )
            g_user[batch.uniform_users] += lambda2 * gu
            g_item[batch.uniform_items] += lambda2 * gi
        except InsufficientPairsError as e:
            backbone.log(title="Uniformity skipped", message=str(e))
            uniform = 0.0

    grad_user, grad_item = backbone.backpropagate(g_user, g_item)

    align = 0.0
    if lambda1 > 0:
        if anchor is None:
            raise ValueError("An alignment anchor is required when lambda1 > 0")
        align, ga_user, ga_item = alignment_objective(
            backbone, user_emb, item_emb, anchor, reps=(user_reps, item_reps)
        )
        grad_user += lambda1 * ga_user
        grad_item += lambda1 * ga_item

    touched_items = np.unique(np.concatenate([batch.pos_items, batch.neg_items]))
    touched_users = np.unique(batch.users)
    l2_users, gl_users = l2_term(user_emb[touched_users])
    l2_items, gl_items = l2_term(item_emb[touched_items])
    l2 = (l2_users + l2_items) / n
    if lam > 0:
        grad_user[touched_users] += (lam / n) * gl_users
        grad_item[touched_items] += (lam / n) * gl_items

    breakdown = total_loss(rec, align, uniform, l2, lambda1, lambda2, lam)
    return breakdown, grad_user, grad_item


def objective_closure(backbone, batch, lambda1, lambda2, lam, t=2.0, anchor=None,
                      num_users: int = None, dim: int = None, sides=(True, True)) -> Callable:
    """Wraps compute_objective as f(flat_params) -> (total, flat_grad).

    `flat_params` is the user table followed by the item table, row-major.
    """

    def fn(flat):
        user_emb = flat[: num_users * dim].reshape(num_users, dim)
        item_emb = flat[num_users * dim:].reshape(-1, dim)
        breakdown, gu, gi = compute_objective(
            backbone, user_emb, item_emb, batch, lambda1, lambda2, lam, t=t, anchor=anchor, sides=sides
        )
        return breakdown.total, np.concatenate([gu.ravel(), gi.ravel()])

    return fn
