from typing import List, Optional

import numpy as np

from ..exceptions import SamplingError, UnsampleableUserError
from ..types import GroupAssignment, InteractionSet, TrainBatch


def sample_negative(user: int, train: InteractionSet, rng: np.random.Generator) -> int:
    """Draws an item uniformly from the items `user` has not interacted with in `train`."""
    positives = train.user_items[user]
    if positives.shape[0] >= train.num_items:
        raise UnsampleableUserError(f"User {user} has interacted with every item")
    while True:
        item = int(rng.integers(train.num_items))
        pos = np.searchsorted(positives, item)
        if pos >= positives.shape[0] or positives[pos] != item:
            return item


def sample_negatives(users: np.ndarray, train: InteractionSet, rng: np.random.Generator) -> np.ndarray:
    """Vectorized rejection sampling of one negative per entry of `users`."""
    users = np.asarray(users, dtype=np.int64)
    full = train.user_degrees()[users] >= train.num_items
    if np.any(full):
        raise UnsampleableUserError(f"User {int(users[np.argmax(full)])} has interacted with every item")

    negatives = rng.integers(train.num_items, size=users.shape[0])
    pending = np.arange(users.shape[0])
    while pending.shape[0] > 0:
        codes = users[pending] * train.num_items + negatives[pending]
        rejected = np.isin(codes, train.keys)
        pending = pending[rejected]
        negatives[pending] = rng.integers(train.num_items, size=pending.shape[0])
    return negatives


def _sample_group(indices: np.ndarray, cap: int, rng: np.random.Generator) -> np.ndarray:
    if indices.shape[0] <= cap:
        return indices.copy()
    return np.sort(rng.choice(indices, size=cap, replace=False))


def make_batches(
    train: InteractionSet,
    batch_size: int,
    rng: np.random.Generator,
    groups: Optional[GroupAssignment] = None,
    align_cap: int = 512,
) -> List[TrainBatch]:
    """Shuffles the training pairs once and cuts them into batches.

    Each batch carries one sampled negative per positive, up to `align_cap`
    popular and tail indices per side for the alignment term, and the unique
    users and items (positives and negatives) for the uniformity term.
    """
    if batch_size < 1:
        raise SamplingError(f"batch_size must be >= 1, got {batch_size}")

    empty = np.zeros(0, dtype=np.int64)
    order = rng.permutation(len(train))
    batches = []
    for start in range(0, order.shape[0], batch_size):
        idx = order[start:start + batch_size]
        users = train.users[idx]
        pos_items = train.items[idx]
        neg_items = sample_negatives(users, train, rng)

        if groups is not None:
            align = [
                _sample_group(group, align_cap, rng)
                for group in (groups.popular_users, groups.tail_users,
                              groups.popular_items, groups.tail_items)
            ]
        else:
            align = [empty, empty, empty, empty]

        batches.append(
            TrainBatch(
                users=users,
                pos_items=pos_items,
                neg_items=neg_items,
                align_users_pop=align[0],
                align_users_tail=align[1],
                align_items_pop=align[2],
                align_items_tail=align[3],
                uniform_users=np.unique(users),
                uniform_items=np.unique(np.concatenate([pos_items, neg_items])),
            )
        )
    return batches
