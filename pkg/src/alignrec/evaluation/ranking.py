from typing import Dict, Iterable, Tuple

import numpy as np

from ..types import InteractionSet, RankedList


def model_representations(model) -> Tuple[np.ndarray, np.ndarray]:
    """Accepts a recommender (anything with `final_representations()`) or a (Z, H) pair."""
    if hasattr(model, "final_representations"):
        return model.final_representations()
    user_reps, item_reps = model
    return np.asarray(user_reps), np.asarray(item_reps)


def rank_items(user: int, scores: np.ndarray, train_items: Iterable[int], k: int = 20) -> RankedList:
    """Orders all non-training items by descending score, ties by ascending index."""
    scores = np.asarray(scores, dtype=np.float64)
    order = np.lexsort((np.arange(scores.shape[0]), -scores))
    excluded = np.zeros(scores.shape[0], dtype=bool)
    excluded[np.asarray(list(train_items), dtype=np.int64)] = True
    return RankedList(user=user, items=order[~excluded[order]], k=k)


def rank_users(model, train: InteractionSet, users: Iterable[int], k: int = 20,
               chunk_size: int = 1024) -> Dict[int, RankedList]:
    user_reps, item_reps = model_representations(model)
    users = np.asarray(list(users), dtype=np.int64)
    ranked = {}
    for start in range(0, users.shape[0], chunk_size):
        chunk = users[start:start + chunk_size]
        scores = user_reps[chunk] @ item_reps.T
        for row, user in enumerate(chunk.tolist()):
            ranked[user] = rank_items(user, scores[row], train.user_items[user], k=k)
    return ranked
