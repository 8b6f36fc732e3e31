from typing import Tuple

import numpy as np
from scipy.special import expit


def bpr_term(s_pos, s_neg):
    """-ln sigmoid(s_pos - s_neg), written as softplus(s_neg - s_pos) so it never overflows."""
    return np.logaddexp(0.0, -(np.asarray(s_pos, dtype=np.float64) - s_neg))


def bpr_gradients(z_u: np.ndarray, h_i: np.ndarray, h_neg: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradients of bpr_term(z_u.h_i, z_u.h_neg) w.r.t. (z_u, h_i, h_neg)."""
    c = expit(-(np.dot(z_u, h_i) - np.dot(z_u, h_neg)))
    return -c * (h_i - h_neg), -c * z_u, c * z_u


def bpr_batch(user_reps, item_reps, users, pos_items, neg_items):
    """Mean BPR loss over a batch of triples with dense gradients.

    Returns:
        tuple: (loss, grad w.r.t. user_reps, grad w.r.t. item_reps)
    """
    z = user_reps[users]
    diff = np.sum(z * (item_reps[pos_items] - item_reps[neg_items]), axis=1)
    n = max(users.shape[0], 1)
    loss = float(np.sum(bpr_term(diff, 0.0)) / n)

    c = (expit(-diff) / n)[:, None]
    grad_user = np.zeros_like(user_reps)
    grad_item = np.zeros_like(item_reps)
    np.add.at(grad_user, users, -c * (item_reps[pos_items] - item_reps[neg_items]))
    np.add.at(grad_item, pos_items, -c * z)
    np.add.at(grad_item, neg_items, c * z)
    return loss, grad_user, grad_item
