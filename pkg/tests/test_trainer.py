import numpy as np
import pytest
from scipy.stats import chisquare

from alignrec.bprmf import BPRMF
from alignrec.dataset import assign_groups, compute_popularity, filter_k_core, from_pairs, split_per_user
from alignrec.exceptions import ImproperlyConfigured, SamplingError, TrainingAbortedError, UnsampleableUserError
from alignrec.lightgcn import LightGCN
from alignrec.trainer import adam_step, fit, make_batches, make_recommender, sample_negative, sample_negatives
from alignrec.types import AdamState, GroupAssignment, LossBreakdown, TrainConfig

from conftest import make_set

QUIET = {"verbose": False}


def test_sample_negative_forced():
    train = make_set(1, 3, [(0, 0), (0, 1)])
    rng = np.random.default_rng(0)
    assert {sample_negative(0, train, rng) for _ in range(50)} == {2}


def test_sample_negative_is_uniform_over_unseen_items():
    train = make_set(1, 6, [(0, 0), (0, 3)])
    rng = np.random.default_rng(1)
    counts = np.bincount([sample_negative(0, train, rng) for _ in range(20000)], minlength=6)
    assert counts[0] == 0 and counts[3] == 0
    assert np.all(np.abs(counts[[1, 2, 4, 5]] - 5000) < 400)


def test_sample_negatives_chi_square():
    train = make_set(2, 8, [(0, 0), (0, 1), (0, 2), (1, 7)])
    rng = np.random.default_rng(2)
    negatives = sample_negatives(np.zeros(100000, dtype=np.int64), train, rng)
    assert not np.isin(negatives, [0, 1, 2]).any()
    counts = np.bincount(negatives, minlength=8)[3:]
    assert chisquare(counts).pvalue > 0.001


def test_unsampleable_user():
    train = make_set(1, 2, [(0, 0), (0, 1)])
    rng = np.random.default_rng(0)
    with pytest.raises(UnsampleableUserError):
        sample_negative(0, train, rng)
    with pytest.raises(UnsampleableUserError):
        sample_negatives(np.array([0]), train, rng)


def _large_train():
    codes = np.random.default_rng(9).permutation(100 * 100)[:5000]
    return make_set(100, 100, sorted((int(c // 100), int(c % 100)) for c in codes))


def test_make_batches_sizes_and_determinism():
    train = _large_train()
    first = make_batches(train, 2048, np.random.default_rng(5))
    second = make_batches(train, 2048, np.random.default_rng(5))

    assert [len(batch) for batch in first] == [2048, 2048, 904]
    for a, b in zip(first, second):
        assert np.array_equal(a.users, b.users)
        assert np.array_equal(a.neg_items, b.neg_items)

    codes = np.concatenate([b.users * train.num_items + b.neg_items for b in first])
    assert not np.isin(codes, train.keys).any()
    positives = np.concatenate([b.users * train.num_items + b.pos_items for b in first])
    assert np.array_equal(np.sort(positives), train.keys)


def test_make_batches_alignment_and_uniformity_sets():
    train = _large_train()
    flags = np.zeros(100, dtype=bool)
    flags[:20] = True
    groups = GroupAssignment(user_popular=flags, item_popular=flags.copy(), top_fraction=0.2)

    for batch in make_batches(train, 1000, np.random.default_rng(0), groups, align_cap=8):
        for name in ("align_users_pop", "align_users_tail", "align_items_pop", "align_items_tail"):
            assert 0 < getattr(batch, name).shape[0] <= 8
        assert np.all(flags[batch.align_users_pop]) and not np.any(flags[batch.align_users_tail])
        assert np.array_equal(batch.uniform_users, np.unique(batch.users))
        assert set(batch.uniform_items.tolist()) == set(batch.pos_items.tolist()) | set(batch.neg_items.tolist())


def test_adam_first_step_is_lr_times_sign():
    param = np.zeros((2, 3))
    grad = np.array([[0.3, -2.0, 5.0], [0.0, 0.0, 0.0]])
    state = AdamState.for_params([param])

    adam_step([param], [grad], state, lr=0.001)

    assert np.all(np.abs(param[0] + 0.001 * np.sign(grad[0])) <= 1e-9)
    assert np.array_equal(param[1], np.zeros(3))
    assert np.array_equal(state.m[0][1], np.zeros(3))
    assert state.step == 1


def test_adam_constant_gradient_moves_at_lr():
    param = np.zeros((1, 2))
    grad = np.array([[0.02, -7.0]])
    state = AdamState.for_params([param])
    for _ in range(200):
        previous = param.copy()
        adam_step([param], [grad], state, lr=0.01)
    assert np.allclose(param - previous, [[-0.01, 0.01]], atol=1e-8)


def test_adam_zero_gradient_leaves_parameters():
    param = np.random.default_rng(0).standard_normal((3, 2))
    before = param.copy()
    adam_step([param], [np.zeros_like(param)], AdamState.for_params([param]), lr=0.1)
    assert np.array_equal(param, before)


def test_adam_aborts_on_non_finite_gradient():
    param = np.zeros((2, 2))
    grad = np.array([[0.0, np.nan], [1.0, 1.0]])
    with pytest.raises(TrainingAbortedError) as info:
        adam_step([param], [grad], AdamState.for_params([param]), lr=0.1)
    assert info.value.diagnostics["first_entry"] == [0, 1]
    assert np.array_equal(param, np.zeros((2, 2)))


def test_patience_zero_runs_one_epoch(toy_split, toy_groups):
    rec = BPRMF(config={**QUIET, "patience": 0, "epochs_max": 10, "dim": 8, "batch_size": 16})
    _, history = rec.fit(toy_split, toy_groups)
    assert len(history) == 1
    assert set(history[0]) >= {"epoch", "rec", "align", "uniform", "l2", "total", "val_ndcg20", "elapsed_s"}


def test_training_loss_decreases_on_toy_set(toy_split, toy_groups):
    config = {**QUIET, "lambda1": 0, "lambda2": 0, "lr": 0.05, "dim": 16, "epochs_max": 5, "patience": 10}
    _, history = fit(toy_split, toy_groups, config)
    assert len(history) == 5
    assert history[-1]["rec"] < history[0]["rec"]
    assert all(record["align"] == 0.0 and record["uniform"] == 0.0 for record in history)


def test_fit_is_deterministic(toy_split, toy_groups):
    config = {**QUIET, "backbone": "lightgcn", "layers": 2, "dim": 8, "batch_size": 8, "epochs_max": 3}
    first, _ = fit(toy_split, toy_groups, config)
    second, _ = fit(toy_split, toy_groups, config)
    assert np.array_equal(first.user_emb, second.user_emb)
    assert np.array_equal(first.item_emb, second.item_emb)


def test_zero_layer_lightgcn_without_regularizers_is_bprmf(toy_split, toy_groups):
    config = {**QUIET, "lambda1": 0, "lambda2": 0, "dim": 8, "batch_size": 8, "epochs_max": 3}
    plain, _ = BPRMF(config=config).fit(toy_split, toy_groups)
    graph, _ = LightGCN(config={**config, "backbone": "lightgcn", "layers": 0}).fit(toy_split, toy_groups)
    assert np.array_equal(plain.user_emb, graph.user_emb)
    assert np.array_equal(plain.item_emb, graph.item_emb)


def test_best_epoch_is_kept(toy_split, toy_groups):
    improvements = []
    rec = make_recommender({**QUIET, "dim": 8, "batch_size": 8, "epochs_max": 6, "patience": 6, "lr": 0.05})
    best, history = rec.fit(toy_split, toy_groups, on_improve=lambda state, record: improvements.append(record))

    assert improvements[-1]["val_ndcg20"] == max(record["val_ndcg20"] for record in history)
    assert rec.state is best


def test_track_properties(toy_split, toy_groups):
    rec = BPRMF(config={**QUIET, "dim": 4, "epochs_max": 1, "track_properties": True})
    _, history = rec.fit(toy_split, toy_groups)
    assert history[0]["align_property"] >= -1e-12
    assert -8.0 <= history[0]["uniform_property"] <= 0.0
    # one validation item per user leaves PRU undefined
    assert history[0]["val_pru"] is None


def test_alignment_needs_both_groups(toy_split):
    empty = GroupAssignment(
        user_popular=np.zeros(6, dtype=bool), item_popular=np.zeros(12, dtype=bool), top_fraction=0.2
    )
    with pytest.raises(SamplingError):
        BPRMF(config={**QUIET, "lambda1": 0.1}).fit(toy_split, empty)


def test_non_finite_loss_aborts_with_diagnostics(monkeypatch, toy_split, toy_groups):
    def broken_objective(backbone, user_emb, item_emb, batch, lambda1, lambda2, lam, **kwargs):
        nan = float("nan")
        breakdown = LossBreakdown(nan, 0.0, 0.0, 0.0, nan, lambda1, lambda2, lam)
        return breakdown, np.zeros_like(user_emb), np.zeros_like(item_emb)

    monkeypatch.setattr("alignrec.base.base.compute_objective", broken_objective)
    with pytest.raises(TrainingAbortedError) as info:
        BPRMF(config={**QUIET, "dim": 4}).fit(toy_split, toy_groups)
    assert info.value.diagnostics["epoch"] == 1
    assert info.value.diagnostics["batch"] == 0


def test_fit_without_validation_interactions():
    # five interactions per user leave no validation item after a 70/10/20 split
    pairs = [(u, (2 * u + j) % 10) for u in range(6) for j in range(5)]
    interactions = from_pairs([f"u{u}" for u, _ in pairs], [f"i{i}" for _, i in pairs])
    split = split_per_user(filter_k_core(interactions, 3), seed=0)
    assert len(split.validation) == 0
    groups = assign_groups(compute_popularity(split.train), 0.2)

    config = {**QUIET, "lambda1": 0, "lambda2": 0, "lr": 0.05, "dim": 8, "batch_size": 8, "epochs_max": 5}
    improvements = []
    best, history = BPRMF(config=config).fit(
        split, groups, on_improve=lambda state, record: improvements.append(record)
    )

    assert len(history) == 5
    assert all(record["val_ndcg20"] is None for record in history)
    assert improvements[-1]["total"] == min(record["total"] for record in history)
    assert best.num_users == 6


def test_side_switches_from_config():
    cfg = TrainConfig.from_config({"regularize_users": "false"})
    assert cfg.sides == (False, True)
    assert cfg.to_dict()["regularize_users"] is False
    with pytest.raises(ImproperlyConfigured):
        TrainConfig.from_config({"regularize_users": "no", "regularize_items": "off"})
