import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize

from alignrec.exceptions import DegenerateBandwidthError, InsufficientPairsError, NonFiniteLossError
from alignrec.losses import (
    AlignmentAnchor,
    alignment_loss,
    bpr_gradients,
    bpr_term,
    finite_difference_check,
    l2_term,
    median_heuristic_gamma,
    mmd_sq,
    mmd_sq_grad,
    total_loss,
    uniformity_loss,
    uniformity_side,
    uniformity_value,
)


def test_bpr_term_values():
    assert bpr_term(1.3, 1.3) == pytest.approx(np.log(2.0))
    assert bpr_term(2.0, 0.0) == pytest.approx(0.126928, abs=1e-6)
    far = bpr_term(50.0, 0.0)
    assert np.isfinite(far) and far == pytest.approx(0.0, abs=1e-20)
    assert np.isfinite(bpr_term(-800.0, 0.0))


def test_bpr_gradients_at_equal_scores():
    z = np.array([1.0, -2.0])
    h = np.array([0.5, 0.5])
    g_z, g_pos, g_neg = bpr_gradients(z, h, np.array([0.5, 0.5]))
    assert np.array_equal(g_z, [0.0, 0.0])
    assert np.allclose(g_pos, -0.5 * z)
    assert np.allclose(g_neg, 0.5 * z)
    assert np.array_equal(g_pos, -g_neg)


def test_bpr_gradients_match_differences():
    rng = np.random.default_rng(0)
    z, h, n = rng.standard_normal((3, 5))

    def loss_fn(flat):
        zz, hh, nn = flat.reshape(3, 5)
        value = float(bpr_term(zz @ hh, zz @ nn))
        return value, np.concatenate(bpr_gradients(zz, hh, nn))

    assert finite_difference_check(loss_fn, np.concatenate([z, h, n])) < 1e-6


def test_median_heuristic_gamma():
    # squared distances {1, 4, 9}
    assert median_heuristic_gamma(np.array([[0.0], [1.0], [3.0]])) == pytest.approx(0.25)
    # squared distances {1, 1, 1, 4, 4, 9} -> median 2.5
    assert median_heuristic_gamma(np.array([[0.0], [1.0], [2.0], [3.0]])) == pytest.approx(0.4)
    with pytest.raises(DegenerateBandwidthError):
        median_heuristic_gamma(np.ones((4, 2)))


def _gram_mmd(X, Y, gamma):
    points = np.vstack([X, Y])
    n, m = X.shape[0], Y.shape[0]
    weights = np.concatenate([np.full(n, 1.0 / n), np.full(m, -1.0 / m)])
    gram = np.empty((n + m, n + m))
    for a in range(n + m):
        for b in range(n + m):
            gram[a, b] = np.exp(-gamma * np.sum((points[a] - points[b]) ** 2))
    return float(weights @ gram @ weights)


def test_mmd_single_pair():
    x = np.array([[0.0, 0.0]])
    y = np.array([[np.sqrt(np.log(2.0)), 0.0]])
    assert mmd_sq(x, y, 1.0) == pytest.approx(1.0)


def test_mmd_matches_gram_expansion():
    rng = np.random.default_rng(7)
    for _ in range(200):
        n, m = int(rng.integers(1, 17)), int(rng.integers(1, 17))
        X, Y = rng.standard_normal((n, 3)), rng.standard_normal((m, 3))
        gamma = float(rng.uniform(0.1, 2.0))
        value = mmd_sq(X, Y, gamma)
        assert abs(value - _gram_mmd(X, Y, gamma)) <= 1e-10
        assert value >= -1e-12
        assert mmd_sq(X, X, gamma) <= 1e-12


def test_mmd_of_permuted_copy_is_zero():
    X = np.random.default_rng(1).standard_normal((10, 4))
    assert abs(mmd_sq(X, X[::-1], 0.5)) <= 1e-12


def test_mmd_gradient_matches_differences():
    rng = np.random.default_rng(3)
    X, Y = rng.standard_normal((6, 3)), rng.standard_normal((5, 3))

    def loss_fn(flat):
        value, grad = mmd_sq_grad(flat.reshape(6, 3), Y, 0.7)
        return value, grad.ravel()

    assert finite_difference_check(loss_fn, X.ravel()) < 1e-6


def _anchor(user_reps, item_reps, user_tail, user_pop, item_tail, item_pop, gamma=1.0, sides=(True, True)):
    unit = lambda m: m / np.linalg.norm(m, axis=1, keepdims=True)  # noqa: E731
    return AlignmentAnchor(
        user_tail=user_tail,
        item_tail=item_tail,
        user_pop_reps=unit(user_reps[user_pop]),
        item_pop_reps=unit(item_reps[item_pop]),
        gamma_user=gamma,
        gamma_item=gamma,
        pinned_users=user_pop,
        pinned_items=item_pop,
        pinned_user_rows=user_reps[user_pop].copy(),
        pinned_item_rows=item_reps[item_pop].copy(),
        sides=sides,
    )


def test_alignment_loss_is_zero_for_identical_groups():
    reps = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 0.0], [0.0, 1.0]])
    anchor = _anchor(reps, reps, np.array([0, 1]), np.array([2, 3]), np.array([0, 1]), np.array([2, 3]))
    value, g_user, g_item = alignment_loss(reps, reps, anchor)
    assert abs(value) <= 1e-12
    assert np.allclose(g_user, 0.0) and np.allclose(g_item, 0.0)


def test_alignment_loss_halves_the_two_sides():
    rng = np.random.default_rng(2)
    user_reps, item_reps = rng.standard_normal((6, 3)), rng.standard_normal((8, 3))
    user_tail, user_pop = np.array([0, 1, 2]), np.array([3, 4, 5])
    item_tail, item_pop = np.array([0, 2, 4, 6]), np.array([1, 3])
    anchor = _anchor(user_reps, item_reps, user_tail, user_pop, item_tail, item_pop, gamma=0.8)

    unit = lambda m: m / np.linalg.norm(m, axis=1, keepdims=True)  # noqa: E731
    a = mmd_sq(unit(user_reps[user_tail]), unit(user_reps[user_pop]), 0.8)
    b = mmd_sq(unit(item_reps[item_tail]), unit(item_reps[item_pop]), 0.8)
    value, g_user, g_item = alignment_loss(user_reps, item_reps, anchor)

    assert value == pytest.approx((a + b) / 2)
    assert np.all(g_user[user_pop] == 0.0)
    assert np.all(g_item[item_pop] == 0.0)
    assert np.any(g_user[user_tail] != 0.0)


def test_alignment_loss_single_side():
    rng = np.random.default_rng(5)
    user_reps, item_reps = rng.standard_normal((6, 3)), rng.standard_normal((8, 3))
    tails = dict(user_tail=np.array([0, 1, 2]), user_pop=np.array([3, 4, 5]),
                 item_tail=np.array([0, 2, 4, 6]), item_pop=np.array([1, 3]))
    unit = lambda m: m / np.linalg.norm(m, axis=1, keepdims=True)  # noqa: E731

    items_only = _anchor(user_reps, item_reps, gamma=0.8, sides=(False, True), **tails)
    value, g_user, g_item = alignment_loss(user_reps, item_reps, items_only)
    assert value == pytest.approx(mmd_sq(unit(item_reps[tails["item_tail"]]), unit(item_reps[tails["item_pop"]]), 0.8))
    assert np.all(g_user == 0.0) and np.any(g_item != 0.0)

    users_only = _anchor(user_reps, item_reps, gamma=0.8, sides=(True, False), **tails)
    value, g_user, g_item = alignment_loss(user_reps, item_reps, users_only)
    assert value == pytest.approx(mmd_sq(unit(user_reps[tails["user_tail"]]), unit(user_reps[tails["user_pop"]]), 0.8))
    assert np.all(g_item == 0.0) and np.any(g_user != 0.0)


def test_uniformity_reference_values():
    antipodal = np.array([[1.0, 0.0], [-1.0, 0.0]])
    assert uniformity_value(antipodal, t=2.0) == pytest.approx(-8.0)

    square = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]])
    expected = np.log((4 * np.exp(-4) + 2 * np.exp(-8)) / 6)
    assert uniformity_value(square, t=2.0) == pytest.approx(expected)
    assert expected == pytest.approx(-4.3963, abs=1e-4)
    assert uniformity_side(square, 2.0)[0] == pytest.approx(expected)

    assert uniformity_value(np.tile([[0.6, 0.8]], (5, 1)), t=2.0) == pytest.approx(0.0)


def test_uniformity_needs_two_points():
    with pytest.raises(InsufficientPairsError):
        uniformity_side(np.ones((1, 3)))
    with pytest.raises(InsufficientPairsError):
        uniformity_loss(np.ones((1, 3)), np.ones((4, 3)))


def test_uniformity_loss_averages_sides():
    rng = np.random.default_rng(4)
    users, items = rng.standard_normal((5, 3)), rng.standard_normal((7, 3))
    unit = lambda m: m / np.linalg.norm(m, axis=1, keepdims=True)  # noqa: E731
    value, _, _ = uniformity_loss(users, items, t=2.0)
    assert value == pytest.approx(0.5 * (uniformity_value(unit(users)) + uniformity_value(unit(items))))


def test_uniformity_loss_single_side():
    rng = np.random.default_rng(6)
    users, items = rng.standard_normal((5, 3)), rng.standard_normal((7, 3))
    unit = lambda m: m / np.linalg.norm(m, axis=1, keepdims=True)  # noqa: E731

    value, g_user, g_item = uniformity_loss(np.ones((1, 3)), items, t=2.0, sides=(False, True))
    assert value == pytest.approx(uniformity_value(unit(items)))
    assert np.all(g_user == 0.0) and np.any(g_item != 0.0)

    value, _, g_item = uniformity_loss(users, items, t=2.0, sides=(True, False))
    assert value == pytest.approx(uniformity_value(unit(users)))
    assert np.all(g_item == 0.0)

    with pytest.raises(ValueError):
        uniformity_loss(users, items, sides=(False, False))


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 40), st.integers(2, 6), st.integers(0, 2**32 - 1))
def test_uniformity_is_bounded_on_the_sphere(n, dim, seed):
    points = np.random.default_rng(seed).standard_normal((n, dim))
    points /= np.linalg.norm(points, axis=1, keepdims=True)
    value = uniformity_value(points, t=2.0)
    assert -8.0 - 1e-9 <= value <= 1e-12


def test_l2_term():
    value, grad = l2_term(np.array([[3.0, 4.0]]))
    assert value == 25.0
    assert np.array_equal(grad, [[6.0, 8.0]])
    assert l2_term(np.zeros((0, 4)))[0] == 0.0


def test_total_loss():
    assert total_loss(1.7, 2.0, 3.0, 4.0, 0.0, 0.0, 0.0).total == 1.7

    breakdown = total_loss(1.0, 2.0, 3.0, 4.0, 0.1, 0.01, 1e-4)
    assert breakdown.total == pytest.approx(1.2304, abs=1e-10)
    parts = breakdown.rec + 0.1 * breakdown.align + 0.01 * breakdown.uniform + 1e-4 * breakdown.l2
    assert abs(breakdown.total - parts) <= 1e-10

    with pytest.raises(ValueError):
        total_loss(1.0, 0.0, 0.0, 0.0, -0.1, 0.0, 0.0)


def test_finite_difference_check_on_quadratic():
    x = np.random.default_rng(0).standard_normal(9)
    assert finite_difference_check(lambda v: (float(v @ v), 2 * v), x) < 1e-8


def test_finite_difference_check_rejects_bad_input():
    with pytest.raises(ValueError):
        finite_difference_check(lambda v: (0.0, v), np.ones(2), epsilon=1e-2)
    with pytest.raises(NonFiniteLossError):
        finite_difference_check(lambda v: (float("nan"), v), np.ones(2))


def test_uniformity_optimum_on_the_circle():
    def circle(angles):
        return np.stack([np.cos(angles), np.sin(angles)], axis=1)

    def loss_fn(angles):
        value, grad = uniformity_side(circle(angles), t=2.0)
        return value, grad[:, 1] * np.cos(angles) - grad[:, 0] * np.sin(angles)

    start = np.random.default_rng(0).uniform(0.0, 1.0, size=100)
    result = minimize(loss_fn, start, jac=True, method="L-BFGS-B")
    oracle = uniformity_value(circle(np.linspace(0.0, 2 * np.pi, 100, endpoint=False)), t=2.0)

    assert uniformity_value(circle(start), t=2.0) > 0.5 * oracle
    assert abs(result.fun - oracle) <= 0.05 * abs(oracle)
