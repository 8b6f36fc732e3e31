from ..base import RecommenderBase


class BPRMF(RecommenderBase):
    """Matrix factorization: final representations are the embedding rows."""

    def __init__(self, config=None):
        RecommenderBase.__init__(self, config=config)

    @property
    def is_identity(self) -> bool:
        return True

    def prepare(self, train):
        pass

    def propagate(self, user_emb, item_emb):
        return user_emb, item_emb

    def backpropagate(self, grad_user, grad_item):
        return grad_user, grad_item
