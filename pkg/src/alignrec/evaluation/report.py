import dataclasses
import json
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
import plotly.graph_objects as go

from ..exceptions import ImproperlyConfigured, MetricUndefinedError, ValidationError
from ..types import POPULAR, TAIL, GroupAssignment, MetricReport, PopularityTable, Split
from ..utils import atomic_write
from .diagnostics import exposure_baseline, group_exposure, loss_gap, mean_score_gap, score_gap
from .metrics import dp_from_accuracy, hr_at_k, ndcg_at_k, pru_with_counts
from .ranking import model_representations, rank_users

CONVENTIONS = {
    "rank_direction": "1 = best position in the user's full ranked list",
    "pru_average": "mean over users with >= 2 test items and non-degenerate vectors",
    "dp_accuracy": "per-user NDCG@K, 20-bin histogram on [0, 1], JSD in bits",
    "hr_definition": "hits in top-K / number of test items",
    "candidates": "all items minus the user's training items",
}

REPORT_SCHEMA = {
    "type": "object",
    "required": [
        "ks", "hr", "ndcg", "dp", "pru", "group_hr", "group_ndcg", "group_exposure",
        "exposure_baseline", "loss_gap", "score_gap", "users_evaluated", "users_skipped",
        "pru_evaluated", "pru_skipped", "conventions",
    ],
    "properties": {
        "ks": {"type": "array", "items": {"type": "integer"}},
        "hr": {"type": "object"},
        "ndcg": {"type": "object"},
        "dp": {"type": "object"},
        "pru": {"type": ["number", "null"]},
        "group_hr": {"type": "object"},
        "group_ndcg": {"type": "object"},
        "group_exposure": {"type": "object"},
        "exposure_baseline": {"type": "object"},
        "loss_gap": {"type": ["number", "null"]},
        "score_gap": {"type": ["number", "null"]},
        "users_evaluated": {"type": "integer"},
        "users_skipped": {"type": "integer"},
        "pru_evaluated": {"type": "integer"},
        "pru_skipped": {"type": "integer"},
        "conventions": {"type": "object"},
    },
}

_JSON_TYPES = {
    "object": dict,
    "array": list,
    "integer": int,
    "number": (int, float),
    "null": type(None),
}


def validate_report(data: dict):
    """Checks a serialized report against REPORT_SCHEMA; raises ValidationError."""
    missing = [key for key in REPORT_SCHEMA["required"] if key not in data]
    if missing:
        raise ValidationError(f"Report is missing {missing}")
    for key, rule in REPORT_SCHEMA["properties"].items():
        allowed = rule["type"] if isinstance(rule["type"], list) else [rule["type"]]
        if not any(isinstance(data[key], _JSON_TYPES[t]) for t in allowed):
            raise ValidationError(f"Report field {key!r} should be {allowed}")
        if rule["type"] == "array" and not all(isinstance(v, int) for v in data[key]):
            raise ValidationError(f"Report field {key!r} should hold integers")
    for key in ("hr", "ndcg", "dp"):
        if set(data[key]) != {str(k) for k in data["ks"]}:
            raise ValidationError(f"Report field {key!r} does not cover every cutoff")


def _mean(values) -> Optional[float]:
    return float(np.mean(values)) if len(values) else None


def evaluate(model, split: Split, groups: GroupAssignment, pop: PopularityTable,
             ks: List[int] = (20,), target: str = "test", seed: int = 0) -> MetricReport:
    """Runs the full metric suite on the `target` part of `split`.

    Candidates are all items minus the user's training items. Users without
    target interactions are skipped and counted.
    """
    target_set = getattr(split, target)
    ks = sorted(set(int(k) for k in ks))
    users = [u for u, items in enumerate(target_set.user_items) if items.shape[0] > 0]
    if not users:
        raise MetricUndefinedError(f"No user has {target} interactions")

    ranked = rank_users(model, split.train, users, k=max(ks))

    hr, ndcg, dp = {}, {}, {}
    group_hr = {POPULAR: {}, TAIL: {}}
    group_ndcg = {POPULAR: {}, TAIL: {}}
    exposure = {}
    for k in ks:
        per_user_hr = np.full(split.train.num_users, np.nan)
        per_user_ndcg = np.full(split.train.num_users, np.nan)
        for user in users:
            items = target_set.user_items[user]
            per_user_hr[user] = hr_at_k(ranked[user], items, k)
            per_user_ndcg[user] = ndcg_at_k(ranked[user], items, k)

        key = str(k)
        hr[key] = float(np.nanmean(per_user_hr))
        ndcg[key] = float(np.nanmean(per_user_ndcg))
        for label, mask in ((POPULAR, groups.user_popular), (TAIL, ~groups.user_popular)):
            group_hr[label][key] = _mean(per_user_hr[mask][~np.isnan(per_user_hr[mask])])
            group_ndcg[label][key] = _mean(per_user_ndcg[mask][~np.isnan(per_user_ndcg[mask])])
        try:
            dp[key] = dp_from_accuracy(per_user_ndcg, groups)
        except MetricUndefinedError:
            dp[key] = None
        exposure[key] = group_exposure(ranked.values(), groups.item_popular, k)

    try:
        pru_value, pru_evaluated, pru_skipped = pru_with_counts(ranked, target_set, pop.item_pop)
    except MetricUndefinedError:
        pru_value, pru_evaluated, pru_skipped = None, 0, len(users)

    try:
        gap = loss_gap(model, split.train, groups, seed=seed)
    except ValidationError:
        gap = None
    try:
        s_gap = mean_score_gap(model, groups)
    except ValidationError:
        s_gap = None

    return MetricReport(
        ks=ks,
        hr=hr,
        ndcg=ndcg,
        dp=dp,
        pru=pru_value,
        group_hr=group_hr,
        group_ndcg=group_ndcg,
        group_exposure=exposure,
        exposure_baseline=exposure_baseline(target_set, groups.item_popular),
        loss_gap=gap,
        score_gap=s_gap,
        users_evaluated=len(users),
        users_skipped=split.train.num_users - len(users),
        pru_evaluated=pru_evaluated,
        pru_skipped=pru_skipped,
        conventions=dict(CONVENTIONS),
    )


def validation_ndcg(model, split: Split, k: int = 20) -> Optional[float]:
    """Mean NDCG@k over users with validation interactions, None when no user has any."""
    users = [u for u, items in enumerate(split.validation.user_items) if items.shape[0] > 0]
    if not users:
        return None
    ranked = rank_users(model, split.train, users, k=k)
    return float(np.mean([ndcg_at_k(ranked[u], split.validation.user_items[u], k) for u in users]))


def validation_pru(model, split: Split) -> Optional[float]:
    """PRU on the validation interactions against training popularity, None when undefined."""
    users = [u for u, items in enumerate(split.validation.user_items) if items.shape[0] >= 2]
    if not users:
        return None
    ranked = rank_users(model, split.train, users)
    try:
        return pru_with_counts(ranked, split.validation, split.train.item_degrees())[0]
    except MetricUndefinedError:
        return None


def report_to_dict(report: MetricReport) -> dict:
    return dataclasses.asdict(report)


def write_report(path, report: MetricReport):
    data = report_to_dict(report)
    validate_report(data)
    atomic_write(path, json.dumps(data, indent=2, sort_keys=True) + "\n")


def summary_frame(report: MetricReport) -> pd.DataFrame:
    rows = []
    for k in report.ks:
        key = str(k)
        rows.append({
            "K": k,
            "HR": report.hr[key],
            "NDCG": report.ndcg[key],
            "DP": report.dp[key],
            "popular exposure": report.group_exposure[key][POPULAR],
            "PRU": report.pru,
        })
    return pd.DataFrame(rows)


def exposure_frame(group_exposure: Dict[str, Dict[str, float]], baseline: Dict[str, float]) -> pd.DataFrame:
    """One row per (K, item group) with the top-K share next to the test-set share."""
    rows = [
        {"k": int(k), "group": group, "share": share, "test_share": baseline[group]}
        for k, shares in group_exposure.items()
        for group, share in shares.items()
    ]
    return pd.DataFrame(rows, columns=["k", "group", "share", "test_share"])


def exposure_figure(frame: pd.DataFrame, title: Optional[str] = None) -> go.Figure:
    fig = go.Figure()
    for k, part in frame.groupby("k"):
        fig.add_trace(go.Bar(name=f"top-{k}", x=part["group"], y=part["share"]))
    baseline = frame.drop_duplicates("group")
    fig.add_trace(go.Bar(name="test set", x=baseline["group"], y=baseline["test_share"]))
    fig.update_layout(barmode="group", title=title or "Item group exposure", yaxis_title="share")
    return fig


def angular_density_figure(frame: pd.DataFrame, title: Optional[str] = None) -> go.Figure:
    fig = go.Figure()
    for group, part in frame.groupby("group"):
        fig.add_trace(go.Scatter(x=part["angle"], y=part["density"], mode="lines", name=group))
    fig.update_layout(title=title or "Angular density", xaxis_title="angle", yaxis_title="density")
    return fig


def audit_bundle(model, split: Split, groups: GroupAssignment, k: int = 20, seed: int = 0,
                 users: Sequence[str] = ()) -> Dict[str, object]:
    """Scalar diagnostics for the audit command.

    `users` are raw user IDs; each gets its own score gap and top-K raw item IDs.
    """
    user_reps, _ = model_representations(model)
    ranked = rank_users(model, split.train, range(split.train.num_users), k=k)
    bundle = {
        "dim": int(user_reps.shape[1]),
        "k": k,
        "group_exposure": group_exposure(ranked.values(), groups.item_popular, k),
        "exposure_baseline": exposure_baseline(split.test, groups.item_popular),
    }
    for name, fn in (("score_gap", lambda: mean_score_gap(model, groups)),
                     ("loss_gap", lambda: loss_gap(model, split.train, groups, seed=seed))):
        try:
            bundle[name] = fn()
        except ValidationError:
            bundle[name] = None

    if users:
        index = split.train.user_index
        unknown = [raw for raw in users if raw not in index]
        if unknown:
            raise ImproperlyConfigured(f"Unknown user IDs {unknown}")
        bundle["users"] = {}
        for raw in users:
            user = index[raw]
            try:
                gap = score_gap(user, model, groups)
            except MetricUndefinedError:
                gap = None
            bundle["users"][raw] = {
                "group": POPULAR if groups.user_popular[user] else TAIL,
                "score_gap": gap,
                "top_k": [split.train.item_ids[i] for i in ranked[user].top(k).tolist()],
            }
    return bundle
