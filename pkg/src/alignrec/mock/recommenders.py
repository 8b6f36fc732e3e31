import numpy as np

from ..base import RecommenderBase
from ..types import EmbeddingState


class StaticRecommender(RecommenderBase):
    """Serves fixed representations; nothing is trained."""

    def __init__(self, user_emb, item_emb, config=None):
        RecommenderBase.__init__(self, config=config or {"verbose": False})
        self.state = EmbeddingState(
            np.asarray(user_emb, dtype=np.float64), np.asarray(item_emb, dtype=np.float64)
        )

    @property
    def is_identity(self) -> bool:
        return True

    def prepare(self, train):
        pass

    def propagate(self, user_emb, item_emb):
        return user_emb, item_emb

    def backpropagate(self, grad_user, grad_item):
        return grad_user, grad_item


def popularity_recommender(item_pop, num_users: int, ascending: bool = False) -> StaticRecommender:
    """Ranks items by training popularity, most popular first unless `ascending`."""
    sign = -1.0 if ascending else 1.0
    return StaticRecommender(
        np.full((num_users, 1), sign),
        np.asarray(item_pop, dtype=np.float64)[:, None],
    )


def random_recommender(num_users: int, num_items: int, dim: int = 8, seed: int = 0) -> StaticRecommender:
    rng = np.random.default_rng(seed)
    return StaticRecommender(rng.standard_normal((num_users, dim)), rng.standard_normal((num_items, dim)))
