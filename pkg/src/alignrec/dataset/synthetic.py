import numpy as np

from ..types import InteractionSet
from .interactions import from_pairs


def generate_synthetic(
    num_users: int = 2000,
    num_items: int = 1500,
    num_interactions: int = 40000,
    zipf_exponent: float = 1.0,
    activity_skew: float = 1.0,
    num_clusters: int = 20,
    affinity: float = 0.7,
    cluster_zipf_exponent: float = 0.5,
    seed: int = 2024,
) -> InteractionSet:
    """Generates a popularity-skewed implicit-feedback dataset.

    Item popularity follows a Zipf law with exponent `zipf_exponent` over a
    random item permutation. Users and items belong to `num_clusters` taste
    clusters. Inside a cluster items are drawn with the flatter exponent
    `cluster_zipf_exponent`; the remaining draws follow the global law.
    User activity is log-normal with shape `activity_skew`, rescaled so the
    expected total is `num_interactions`.

    Every user draws a fraction `affinity` of their items from their own
    cluster, so sparse and active users share the same taste structure.
    """
    rng = np.random.default_rng(seed)

    ranks = (rng.permutation(num_items) + 1).astype(np.float64)
    weights = ranks ** -zipf_exponent
    global_probs = weights / weights.sum()
    taste_weights = ranks ** -cluster_zipf_exponent

    item_cluster = rng.integers(0, num_clusters, size=num_items)
    user_cluster = rng.integers(0, num_clusters, size=num_users)
    cluster_probs = []
    for c in range(num_clusters):
        w = np.where(item_cluster == c, taste_weights, 0.0)
        cluster_probs.append(w / w.sum() if w.sum() > 0 else global_probs)

    activity = rng.lognormal(mean=0.0, sigma=activity_skew, size=num_users)
    activity = activity / activity.sum() * num_interactions
    degrees = np.clip(np.rint(activity).astype(np.int64), 5, num_items // 2)

    raw_users, raw_items = [], []
    for user in range(num_users):
        n_local = int(rng.binomial(degrees[user], affinity))
        probs = cluster_probs[user_cluster[user]]
        local = rng.choice(num_items, size=min(n_local, int((probs > 0).sum())), replace=False, p=probs)
        rest = degrees[user] - local.shape[0]
        mask = np.ones(num_items, dtype=bool)
        mask[local] = False
        p = np.where(mask, global_probs, 0.0)
        others = rng.choice(num_items, size=rest, replace=False, p=p / p.sum())
        for item in np.concatenate([local, others]).tolist():
            raw_users.append(f"u{user}")
            raw_items.append(f"i{item}")

    return from_pairs(raw_users, raw_items)
