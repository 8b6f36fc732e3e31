import json
import math
import os
from typing import Iterable, List, Tuple

import numpy as np
import pandas as pd

from ..exceptions import DatasetParseError, EmptyDatasetError, ValidationError
from ..types import POPULAR, GroupAssignment, InteractionSet, PopularityTable, Split
from ..utils import atomic_write, require_path, write_json

SPLIT_FILES = {"train": "train.tsv", "validation": "valid.tsv", "test": "test.tsv"}
MANIFEST_FILE = "manifest.json"


def from_pairs(raw_users: Iterable, raw_items: Iterable) -> InteractionSet:
    """Builds an InteractionSet from raw ID pairs.

    Dense indices follow first appearance; repeated pairs are kept once.
    """
    raw_users = [str(u) for u in raw_users]
    raw_items = [str(i) for i in raw_items]
    user_codes, user_ids = pd.factorize(pd.Series(raw_users, dtype=object), sort=False)
    item_codes, item_ids = pd.factorize(pd.Series(raw_items, dtype=object), sort=False)
    users = np.asarray(user_codes, dtype=np.int64)
    items = np.asarray(item_codes, dtype=np.int64)

    num_items = len(item_ids)
    _, first = np.unique(users * max(num_items, 1) + items, return_index=True)
    keep = np.sort(first)

    return InteractionSet(
        num_users=len(user_ids),
        num_items=num_items,
        users=users[keep],
        items=items[keep],
        user_ids=[str(u) for u in user_ids],
        item_ids=[str(i) for i in item_ids],
    )


def load_interactions(path) -> InteractionSet:
    """Reads an implicit-feedback log.

    Each non-comment line is `raw_user<TAB>raw_item`, optionally followed by
    more tab-separated fields (ratings, timestamps) which are ignored. Lines
    starting with `#` and blank lines are skipped.

    Args:
        path: Path of the UTF-8 interaction file.

    Returns:
        InteractionSet: Dense-indexed, de-duplicated interactions.
    """
    require_path(path)

    raw_users, raw_items = [], []
    with open(path, "r", encoding="utf-8") as f:
        for line_number, line in enumerate(f, start=1):
            stripped = line.rstrip("\r\n")
            if not stripped.strip() or stripped.lstrip().startswith("#"):
                continue
            fields = stripped.split("\t")
            if len(fields) < 2:
                fields = stripped.split()
            if len(fields) < 2 or not fields[0].strip() or not fields[1].strip():
                raise DatasetParseError(path, line_number, stripped)
            raw_users.append(fields[0].strip())
            raw_items.append(fields[1].strip())

    if not raw_users:
        raise EmptyDatasetError(f"No interactions found in {path}")

    return from_pairs(raw_users, raw_items)


def _subset(interactions: InteractionSet, keep: np.ndarray) -> InteractionSet:
    users, items = interactions.users[keep], interactions.items[keep]
    kept_users = np.unique(users)
    kept_items = np.unique(items)

    user_map = np.full(interactions.num_users, -1, dtype=np.int64)
    user_map[kept_users] = np.arange(kept_users.shape[0])
    item_map = np.full(interactions.num_items, -1, dtype=np.int64)
    item_map[kept_items] = np.arange(kept_items.shape[0])

    return InteractionSet(
        num_users=int(kept_users.shape[0]),
        num_items=int(kept_items.shape[0]),
        users=user_map[users],
        items=item_map[items],
        user_ids=[interactions.user_ids[u] for u in kept_users.tolist()],
        item_ids=[interactions.item_ids[i] for i in kept_items.tolist()],
    )


def filter_k_core(interactions: InteractionSet, k: int = 5) -> InteractionSet:
    """Removes users and items with fewer than `k` interactions until none remain.

    The result may be empty. Surviving entities keep their relative order.
    """
    if k < 1:
        raise ValidationError(f"k must be >= 1, got {k}")

    keep = np.ones(len(interactions), dtype=bool)
    while True:
        users, items = interactions.users[keep], interactions.items[keep]
        user_deg = np.bincount(users, minlength=interactions.num_users)
        item_deg = np.bincount(items, minlength=interactions.num_items)
        ok = (user_deg[interactions.users] >= k) & (item_deg[interactions.items] >= k) & keep
        if np.array_equal(ok, keep):
            break
        keep = ok

    if keep.all():
        return interactions
    return _subset(interactions, keep)


def _view(interactions: InteractionSet, users: List[int], items: List[int]) -> InteractionSet:
    return InteractionSet(
        num_users=interactions.num_users,
        num_items=interactions.num_items,
        users=np.asarray(users, dtype=np.int64),
        items=np.asarray(items, dtype=np.int64),
        user_ids=interactions.user_ids,
        item_ids=interactions.item_ids,
    )


def split_per_user(
    interactions: InteractionSet,
    ratios: Tuple[float, float, float] = (0.7, 0.1, 0.2),
    seed: int = 2024,
) -> Split:
    """Splits every user's interactions into train / validation / test.

    Per user the items are shuffled with a seeded generator, then
    `floor(ratios[2] * n)` go to test, `floor(ratios[1] * n)` to validation
    and the remainder (always at least one) to train.
    """
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValidationError(f"Split ratios must sum to 1, got {ratios}")

    rng = np.random.default_rng(seed)
    parts = {"train": ([], []), "validation": ([], []), "test": ([], [])}

    for user, items in enumerate(interactions.user_items):
        n = items.shape[0]
        if n == 0:
            raise ValidationError(f"User {interactions.user_ids[user]} has no interactions")
        shuffled = rng.permutation(items)
        n_test = math.floor(ratios[2] * n + 1e-9)
        n_valid = math.floor(ratios[1] * n + 1e-9)
        if n - n_test - n_valid < 1:
            n_valid = max(0, n - n_test - 1)
            n_test = n - n_valid - 1

        chunks = {
            "test": shuffled[:n_test],
            "validation": shuffled[n_test:n_test + n_valid],
            "train": shuffled[n_test + n_valid:],
        }
        for name, chunk in chunks.items():
            chunk = np.sort(chunk)
            parts[name][0].extend([user] * chunk.shape[0])
            parts[name][1].extend(chunk.tolist())

    return Split(
        train=_view(interactions, *parts["train"]),
        validation=_view(interactions, *parts["validation"]),
        test=_view(interactions, *parts["test"]),
        seed=seed,
    )


def compute_popularity(train: InteractionSet) -> PopularityTable:
    return PopularityTable(
        user_pop=train.user_degrees(),
        item_pop=train.item_degrees(),
    )


def _top_flags(counts: np.ndarray, top_fraction: float) -> np.ndarray:
    n_popular = int(math.floor(top_fraction * counts.shape[0] + 0.5))
    order = np.lexsort((np.arange(counts.shape[0]), -counts))
    flags = np.zeros(counts.shape[0], dtype=bool)
    flags[order[:n_popular]] = True
    return flags


def assign_groups(pop: PopularityTable, top_fraction: float = 0.2) -> GroupAssignment:
    """Flags the `round(f * count)` most interacted users and items as popular.

    Ties at the boundary go to the lower dense index.
    """
    if not 0 < top_fraction < 1:
        raise ValidationError(f"top_fraction must be in (0, 1), got {top_fraction}")

    return GroupAssignment(
        user_popular=_top_flags(np.asarray(pop.user_pop), top_fraction),
        item_popular=_top_flags(np.asarray(pop.item_pop), top_fraction),
        top_fraction=top_fraction,
    )


def _to_tsv(interactions: InteractionSet) -> str:
    return "".join(f"{u}\t{i}\n" for u, i in zip(interactions.users.tolist(), interactions.items.tolist()))


def write_split(directory, split: Split, pop: PopularityTable, groups: GroupAssignment, **extra):
    """Writes the three split files and the JSON manifest into `directory`."""
    os.makedirs(directory, exist_ok=True)
    for name, filename in SPLIT_FILES.items():
        atomic_write(os.path.join(directory, filename), _to_tsv(getattr(split, name)))

    manifest = {
        "M": split.train.num_users,
        "N": split.train.num_items,
        "seed": split.seed,
        "top_fraction": groups.top_fraction,
        "user_group": groups.user_labels(),
        "item_group": groups.item_labels(),
        "user_pop": [int(c) for c in pop.user_pop],
        "item_pop": [int(c) for c in pop.item_pop],
        "user_ids": split.train.user_ids,
        "item_ids": split.train.item_ids,
        "sizes": {name: len(getattr(split, name)) for name in SPLIT_FILES},
        **extra,
    }
    write_json(os.path.join(directory, MANIFEST_FILE), manifest)
    return manifest


def _read_dense(path, num_users: int, num_items: int, user_ids, item_ids) -> InteractionSet:
    require_path(path)
    users, items = [], []
    with open(path, "r", encoding="utf-8") as f:
        for line_number, line in enumerate(f, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            fields = stripped.split("\t")
            try:
                u, i = int(fields[0]), int(fields[1])
            except (IndexError, ValueError):
                raise DatasetParseError(path, line_number, stripped)
            if not (0 <= u < num_users and 0 <= i < num_items):
                raise DatasetParseError(path, line_number, stripped)
            users.append(u)
            items.append(i)
    return InteractionSet(
        num_users=num_users,
        num_items=num_items,
        users=np.asarray(users, dtype=np.int64),
        items=np.asarray(items, dtype=np.int64),
        user_ids=user_ids,
        item_ids=item_ids,
    )


def load_split(directory):
    """Reads a prepared split back.

    Returns:
        tuple: (Split, PopularityTable, GroupAssignment, manifest dict)
    """
    manifest_path = os.path.join(directory, MANIFEST_FILE)
    require_path(manifest_path)
    with open(manifest_path, "r", encoding="utf-8") as f:
        manifest = json.load(f)

    num_users, num_items = int(manifest["M"]), int(manifest["N"])
    user_ids = manifest.get("user_ids") or [str(u) for u in range(num_users)]
    item_ids = manifest.get("item_ids") or [str(i) for i in range(num_items)]
    parts = {
        name: _read_dense(os.path.join(directory, filename), num_users, num_items, user_ids, item_ids)
        for name, filename in SPLIT_FILES.items()
    }
    split = Split(seed=int(manifest["seed"]), **parts)
    pop = PopularityTable(
        user_pop=np.asarray(manifest["user_pop"], dtype=np.int64),
        item_pop=np.asarray(manifest["item_pop"], dtype=np.int64),
    )
    groups = GroupAssignment(
        user_popular=np.asarray([g == POPULAR for g in manifest["user_group"]], dtype=bool),
        item_popular=np.asarray([g == POPULAR for g in manifest["item_group"]], dtype=bool),
        top_fraction=float(manifest["top_fraction"]),
    )
    return split, pop, groups, manifest
