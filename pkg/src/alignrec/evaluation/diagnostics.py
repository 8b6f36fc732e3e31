from typing import Dict, Iterable, Tuple

import numpy as np
import pandas as pd

from ..embeddings import l2_normalize_rows
from ..exceptions import DegenerateBandwidthError, DimensionError, MetricUndefinedError
from ..losses import bpr_term, median_heuristic_gamma, mmd_sq, uniformity_value
from ..trainer.sampling import sample_negatives
from ..types import POPULAR, TAIL, GroupAssignment, InteractionSet, RankedList
from .ranking import model_representations

DENSITY_GRID_POINTS = 360


def group_exposure(ranked_lists: Iterable[RankedList], item_popular: np.ndarray, k: int = 20) -> Dict[str, float]:
    """Share of the filled top-K slots occupied by each item group."""
    item_popular = np.asarray(item_popular, dtype=bool)
    popular_slots = 0
    slots = 0
    for ranked in ranked_lists:
        top = ranked.top(k)
        slots += top.shape[0]
        popular_slots += int(item_popular[top].sum())
    if slots == 0:
        raise MetricUndefinedError("No recommendation slots to measure exposure on")
    share = popular_slots / slots
    return {POPULAR: share, TAIL: 1.0 - share}


def exposure_baseline(test: InteractionSet, item_popular: np.ndarray) -> Dict[str, float]:
    """Share of test interactions that fall on each item group."""
    if len(test) == 0:
        raise MetricUndefinedError("Empty test set")
    share = float(np.asarray(item_popular, dtype=bool)[test.items].mean())
    return {POPULAR: share, TAIL: 1.0 - share}


def loss_gap(model, train: InteractionSet, groups: GroupAssignment, seed: int = 0) -> float:
    """Mean per-triple BPR loss of popular users minus that of tail users.

    Every training pair is paired with a fresh negative drawn from a
    generator seeded with `seed`.
    """
    user_reps, item_reps = model_representations(model)
    rng = np.random.default_rng(seed)
    negatives = sample_negatives(train.users, train, rng)
    z = user_reps[train.users]
    losses = bpr_term(
        np.sum(z * item_reps[train.items], axis=1),
        np.sum(z * item_reps[negatives], axis=1),
    )
    popular = groups.user_popular[train.users]
    if not popular.any() or popular.all():
        raise MetricUndefinedError("Loss gap needs training triples from both user groups")
    return float(losses[popular].mean() - losses[~popular].mean())


def score_gap(user: int, model, groups: GroupAssignment) -> float:
    """Mean score of popular items minus mean score of tail items for one user."""
    user_reps, item_reps = model_representations(model)
    return float(_item_gap_direction(item_reps, groups) @ user_reps[user])


def mean_score_gap(model, groups: GroupAssignment) -> float:
    user_reps, item_reps = model_representations(model)
    return float(np.mean(user_reps @ _item_gap_direction(item_reps, groups)))


def _item_gap_direction(item_reps: np.ndarray, groups: GroupAssignment) -> np.ndarray:
    if not groups.item_popular.any() or groups.item_popular.all():
        raise MetricUndefinedError("Score gap needs both item groups")
    return item_reps[groups.item_popular].mean(axis=0) - item_reps[~groups.item_popular].mean(axis=0)


def angular_density(reps: np.ndarray, bandwidth: float = 0.2,
                    grid_points: int = DENSITY_GRID_POINTS) -> Tuple[np.ndarray, np.ndarray]:
    """Wrapped-Gaussian KDE of the polar angles of 2-D unit rows.

    Returns:
        tuple: (grid over [-pi, pi], density at each grid point)
    """
    reps = np.asarray(reps, dtype=np.float64)
    if reps.ndim != 2 or reps.shape[1] != 2:
        raise DimensionError(f"Angular density needs 2-D representations, got shape {reps.shape}")
    if reps.shape[0] == 0:
        raise MetricUndefinedError("No points for angular density")

    angles = np.arctan2(reps[:, 1], reps[:, 0])
    grid = np.linspace(-np.pi, np.pi, grid_points)
    diffs = grid[:, None] - angles[None, :]
    wraps = np.arange(-3, 4) * 2.0 * np.pi
    shifted = diffs[:, :, None] + wraps[None, None, :]
    kernel = np.exp(-0.5 * (shifted / bandwidth) ** 2) / (bandwidth * np.sqrt(2.0 * np.pi))
    return grid, kernel.sum(axis=2).mean(axis=1)


def angular_density_frame(model, groups: GroupAssignment, bandwidth: float = 0.2) -> pd.DataFrame:
    """Angular densities of each user/item group, columns `angle,density,group`."""
    user_reps, item_reps = model_representations(model)
    frames = []
    for side, reps, flags in (("user", user_reps, groups.user_popular),
                              ("item", item_reps, groups.item_popular)):
        unit = l2_normalize_rows(reps)
        for label, mask in ((POPULAR, flags), (TAIL, ~flags)):
            if not mask.any():
                continue
            grid, density = angular_density(unit[mask], bandwidth)
            frames.append(pd.DataFrame({"angle": grid, "density": density, "group": f"{side}_{label}"}))
    return pd.concat(frames, ignore_index=True)[["angle", "density", "group"]]


def representation_properties(model, groups: GroupAssignment, t: float = 2.0, cap: int = 1024,
                              seed: int = 0) -> Dict[str, float]:
    """Group-alignment (MMD^2 between popular and tail) and global-uniformity
    of the normalized representation tables, each averaged over the two sides
    and computed on at most `cap` rows per group.
    """
    user_reps, item_reps = model_representations(model)
    rng = np.random.default_rng(seed)

    def capped(indices):
        if indices.shape[0] <= cap:
            return indices
        return np.sort(rng.choice(indices, size=cap, replace=False))

    align, uniform = [], []
    for reps, popular, tail in ((user_reps, groups.popular_users, groups.tail_users),
                                (item_reps, groups.popular_items, groups.tail_items)):
        unit = l2_normalize_rows(reps)
        pop_rows, tail_rows = unit[capped(popular)], unit[capped(tail)]
        if pop_rows.shape[0] and tail_rows.shape[0]:
            try:
                gamma = median_heuristic_gamma(np.vstack([tail_rows, pop_rows]))
            except DegenerateBandwidthError:
                gamma = 1.0
            align.append(mmd_sq(tail_rows, pop_rows, gamma))
        everyone = unit[capped(np.arange(unit.shape[0]))]
        if everyone.shape[0] >= 2:
            uniform.append(uniformity_value(everyone, t))
    return {
        "align_property": float(np.mean(align)) if align else float("nan"),
        "uniform_property": float(np.mean(uniform)) if uniform else float("nan"),
    }
