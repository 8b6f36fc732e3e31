from typing import Dict, Iterable, Tuple

import numpy as np
from scipy.special import rel_entr
from scipy.stats import rankdata

from ..exceptions import (
    DistributionDomainError,
    MetricUndefinedError,
    UndefinedCorrelationError,
)
from ..types import GroupAssignment, InteractionSet, RankedList, Split
from .ranking import rank_users


def hr_at_k(ranked: RankedList, test_items: Iterable[int], k: int = 20) -> float:
    """Recall-style hit ratio: |top-K and test| / |test|."""
    test = set(int(i) for i in test_items)
    if not test:
        raise MetricUndefinedError("HR@K needs at least one test item")
    hits = sum(1 for item in ranked.top(k).tolist() if item in test)
    return hits / len(test)


def ndcg_at_k(ranked: RankedList, test_items: Iterable[int], k: int = 20) -> float:
    test = set(int(i) for i in test_items)
    if not test:
        raise MetricUndefinedError("NDCG@K needs at least one test item")
    dcg = sum(
        1.0 / np.log2(position + 2)
        for position, item in enumerate(ranked.top(k).tolist())
        if item in test
    )
    idcg = sum(1.0 / np.log2(j + 2) for j in range(min(k, len(test))))
    return float(dcg / idcg)


def spearman(xs, ys) -> float:
    """Pearson correlation of average ranks (ties share the mean of their span)."""
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.shape != ys.shape or xs.shape[0] < 2:
        raise UndefinedCorrelationError("Spearman needs two equal-length vectors of length >= 2")
    rx = rankdata(xs, method="average")
    ry = rankdata(ys, method="average")
    dx = rx - rx.mean()
    dy = ry - ry.mean()
    denom = np.sqrt(np.sum(dx * dx) * np.sum(dy * dy))
    if denom == 0:
        raise UndefinedCorrelationError("Zero variance in a ranked vector")
    return float(np.clip(np.sum(dx * dy) / denom, -1.0, 1.0))


def pru_with_counts(ranked_lists: Dict[int, RankedList], test: InteractionSet,
                    item_pop: np.ndarray) -> Tuple[float, int, int]:
    """PRU plus the number of evaluated and skipped users.

    For every user with at least two test items, SRC is taken between the
    training popularity of those items and their 1-based positions in the
    user's full ranked list; PRU is minus the mean SRC. Users whose vectors
    have zero variance are skipped.
    """
    values = []
    skipped = 0
    for user, ranked in sorted(ranked_lists.items()):
        items = test.user_items[user]
        if items.shape[0] < 2:
            skipped += 1
            continue
        positions = ranked.positions()
        ranks = [positions[i] for i in items.tolist()]
        try:
            values.append(spearman(np.asarray(item_pop)[items], ranks))
        except UndefinedCorrelationError:
            skipped += 1
    if not values:
        raise MetricUndefinedError("No user qualifies for PRU")
    return -float(np.mean(values)), len(values), skipped


def pru(ranked_lists: Dict[int, RankedList], test: InteractionSet, item_pop: np.ndarray) -> float:
    return pru_with_counts(ranked_lists, test, item_pop)[0]


def accuracy_histogram(values, bins: int = 20) -> np.ndarray:
    """Normalized histogram over [0, 1] with `bins` uniform bins, last bin right-closed."""
    values = np.asarray(values, dtype=np.float64)
    if values.shape[0] == 0:
        raise MetricUndefinedError("Cannot build an accuracy histogram of an empty group")
    counts, _ = np.histogram(np.clip(values, 0.0, 1.0), bins=bins, range=(0.0, 1.0))
    return counts / counts.sum()


def jsd(p, q) -> float:
    """Jensen-Shannon divergence in bits, within [0, 1]."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise DistributionDomainError(f"Shapes differ: {p.shape} vs {q.shape}")
    for name, dist in (("p", p), ("q", q)):
        if np.any(dist < 0) or abs(dist.sum() - 1.0) > 1e-9:
            raise DistributionDomainError(f"{name} is not a probability vector")
    m = 0.5 * (p + q)
    value = 0.5 * np.sum(rel_entr(p, m)) + 0.5 * np.sum(rel_entr(q, m))
    return float(np.clip(value / np.log(2.0), 0.0, 1.0))


def dp_from_accuracy(per_user_accuracy: np.ndarray, groups: GroupAssignment, bins: int = 20) -> float:
    """JSD between the popular and tail user groups' accuracy histograms.

    `per_user_accuracy` holds one value per user (NDCG@K), NaN for users that
    cannot be evaluated.
    """
    per_user_accuracy = np.asarray(per_user_accuracy, dtype=np.float64)
    evaluable = ~np.isnan(per_user_accuracy)
    popular = per_user_accuracy[evaluable & groups.user_popular]
    tail = per_user_accuracy[evaluable & ~groups.user_popular]
    if popular.shape[0] == 0 or tail.shape[0] == 0:
        raise MetricUndefinedError("DP@K needs evaluable users in both groups")
    return jsd(accuracy_histogram(popular, bins), accuracy_histogram(tail, bins))


def dp_at_k(split: Split, groups: GroupAssignment, model, k: int = 20, target: str = "test", bins: int = 20) -> float:
    """DP@K of `model` on the `target` interactions of `split`, with per-user NDCG@K as accuracy."""
    target_set = getattr(split, target)
    users = [u for u, items in enumerate(target_set.user_items) if items.shape[0] > 0]
    accuracy = np.full(split.train.num_users, np.nan)
    for user, ranked in rank_users(model, split.train, users, k=k).items():
        accuracy[user] = ndcg_at_k(ranked, target_set.user_items[user], k)
    return dp_from_accuracy(accuracy, groups, bins)
