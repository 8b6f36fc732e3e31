from typing import Tuple

import numpy as np
import scipy.sparse as sp

from ..base import RecommenderBase
from ..exceptions import GraphConstructionError, ShapeError
from ..types import InteractionSet


def build_normalized_adjacency(train: InteractionSet, allow_isolated: bool = False) -> sp.csr_matrix:
    """Symmetric (M+N)x(M+N) adjacency with entries 1 / sqrt(deg(u) * deg(i)).

    Args:
        train: Training interactions.
        allow_isolated: Accept users or items without training interactions;
            their rows stay empty.

    Returns:
        scipy.sparse.csr_matrix: The normalized bipartite adjacency.
    """
    num_users, num_items = train.num_users, train.num_items
    user_deg = train.user_degrees()
    item_deg = train.item_degrees()
    if not allow_isolated and (np.any(user_deg == 0) or np.any(item_deg == 0)):
        raise GraphConstructionError(
            f"{int(np.sum(user_deg == 0))} user(s) and {int(np.sum(item_deg == 0))} item(s) "
            "have no training interactions"
        )

    values = 1.0 / np.sqrt(user_deg[train.users].astype(np.float64) * item_deg[train.items])
    rows = np.concatenate([train.users, num_users + train.items])
    cols = np.concatenate([num_users + train.items, train.users])
    size = num_users + num_items
    return sp.csr_matrix((np.concatenate([values, values]), (rows, cols)), shape=(size, size))


def propagate(emb0: np.ndarray, adj: sp.spmatrix, layers: int) -> np.ndarray:
    """Mean of E^(0) .. E^(L) with E^(l+1) = A E^(l)."""
    if layers < 0:
        raise ValueError(f"layers must be >= 0, got {layers}")
    if layers == 0:
        return emb0
    if adj.shape[1] != emb0.shape[0]:
        raise ShapeError(f"Adjacency is {adj.shape}, embeddings have {emb0.shape[0]} rows")

    current = emb0
    total = emb0.copy()
    for _ in range(layers):
        current = adj @ current
        total += current
    return total / (layers + 1)


class LightGCN(RecommenderBase):
    """Graph-propagated representations averaged over `layers` hops."""

    def __init__(self, config=None):
        RecommenderBase.__init__(self, config=config)
        self.layers = self.train_config.backbone.layers
        self.adjacency = None

    @property
    def is_identity(self) -> bool:
        return self.layers == 0

    def prepare(self, train: InteractionSet):
        self.adjacency = build_normalized_adjacency(train, allow_isolated=True)
        self.num_users = train.num_users
        isolated = int(np.sum(train.item_degrees() == 0))
        if isolated:
            self.log(title="LightGCN", message=f"{isolated} item(s) have no training interactions")

    def _stacked(self, user_part, item_part) -> Tuple[np.ndarray, np.ndarray]:
        if self.adjacency is None:
            raise ValueError("LightGCN.prepare() must run before propagation")
        out = propagate(np.vstack([user_part, item_part]), self.adjacency, self.layers)
        return out[: self.num_users], out[self.num_users:]

    def propagate(self, user_emb, item_emb):
        if self.layers == 0:
            return user_emb, item_emb
        return self._stacked(user_emb, item_emb)

    def backpropagate(self, grad_user, grad_item):
        # the propagation operator is symmetric, so its transpose is itself
        if self.layers == 0:
            return grad_user, grad_item
        return self._stacked(grad_user, grad_item)
