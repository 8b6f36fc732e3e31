import numpy as np
import pytest

from alignrec.dataset import assign_groups, compute_popularity
from alignrec.types import InteractionSet, Split


def make_set(num_users, num_items, pairs):
    users = np.asarray([u for u, _ in pairs], dtype=np.int64)
    items = np.asarray([i for _, i in pairs], dtype=np.int64)
    return InteractionSet(
        num_users=num_users,
        num_items=num_items,
        users=users,
        items=items,
        user_ids=[f"u{u}" for u in range(num_users)],
        item_ids=[f"i{i}" for i in range(num_items)],
    )


@pytest.fixture
def toy_split():
    # 6 users x 5 training items out of 12, one validation and one test item each
    num_users, num_items = 6, 12
    train = [(u, (2 * u + j) % num_items) for u in range(num_users) for j in range(5)]
    validation = [(u, (2 * u + 5) % num_items) for u in range(num_users)]
    test = [(u, (2 * u + 6) % num_items) for u in range(num_users)]
    return Split(
        train=make_set(num_users, num_items, train),
        validation=make_set(num_users, num_items, validation),
        test=make_set(num_users, num_items, test),
        seed=0,
    )


@pytest.fixture
def toy_groups(toy_split):
    return assign_groups(compute_popularity(toy_split.train), 0.2)


@pytest.fixture
def toy_pop(toy_split):
    return compute_popularity(toy_split.train)
