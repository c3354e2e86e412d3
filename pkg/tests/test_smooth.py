import numpy as np
import pytest

from cobrabench.cobra import AggregationSet, CobraParams, discrete_weights, predict_discrete
from cobrabench.smooth import (GradientDescentConfig, SmoothingParams, TerminationReason,
                               TuningSet, Variant, loss_gradient, phi_beta, scan_loss,
                               smooth_predict, smooth_weights, squared_loss, tune_epsilon)

SUM = Variant.SUMEXP
MAX = Variant.MAXEXP


def _random_instance(rng, l=None, M=None, n=None):
    l = l or int(rng.integers(1, 9))
    M = M or int(rng.integers(1, 4))
    n = n or int(rng.integers(1, 9))
    agg = AggregationSet(rng.normal(size=(l, M)), rng.normal(size=l))
    tun = TuningSet(rng.normal(size=(n, M)), rng.normal(size=n))
    return agg, tun


# ------------------------------------------------------------- phi_beta

def test_phi_balanced_exponents_half():
    for beta in (0.5, 3.0, 40.0):
        assert phi_beta([0.7], 0.7, beta, SUM) == pytest.approx(0.5)
        assert phi_beta([0.7], 0.7, beta, MAX) == pytest.approx(0.5)


def test_phi_three_equal_exponents():
    assert phi_beta([0.0, 0.0], 0.0, 1.0, SUM) == pytest.approx(1 / 3)


def test_phi_maxexp_logistic_value():
    # 1 / (1 + e^-5)
    assert phi_beta([0.5], 1.0, 10.0, MAX) == pytest.approx(0.9933071490757153, abs=1e-12)


def test_phi_in_unit_interval():
    rng = np.random.default_rng(0)
    for _ in range(50):
        diffs = rng.uniform(0, 3, size=rng.integers(1, 4))
        v = phi_beta(diffs, float(rng.uniform(0, 3)), float(rng.uniform(0.1, 20)),
                     rng.choice([SUM, MAX]))
        assert 0.0 < v < 1.0


def test_phi_monotone_in_epsilon_and_diffs():
    # ranges kept moderate so phi stays away from float saturation at 1.0
    rng = np.random.default_rng(1)
    for variant in (SUM, MAX):
        for _ in range(20):
            diffs = rng.uniform(0.1, 1.5, size=3)
            beta = float(rng.uniform(0.5, 4))
            lo, hi = sorted(rng.uniform(0, 1.8, size=2))
            if lo == hi:
                continue
            assert phi_beta(diffs, hi, beta, variant) > phi_beta(diffs, lo, beta, variant)
            bigger = diffs.copy()
            bigger[diffs.argmax()] += 0.5  # raises the max, so both variants must drop
            assert phi_beta(bigger, 1.0, beta, variant) < phi_beta(diffs, 1.0, beta, variant)


def test_phi_overflow_safe_at_beta_extremes():
    # |beta*x| up to 1e4 must not overflow or go non-finite
    for variant in (SUM, MAX):
        v = phi_beta([2.0], 1.0, 5000.0, variant)
        assert np.isfinite(v) and 0.0 <= v <= 1.0
        v = phi_beta([0.0], 2.0, 5000.0, variant)
        assert np.isfinite(v) and 0.0 <= v <= 1.0


def test_phi_rejects_negative_diffs():
    with pytest.raises(ValueError):
        phi_beta([-0.1], 1.0, 1.0, SUM)


# ------------------------------------------------- weights and predict

def test_smooth_weights_zero_diff_row():
    agg = AggregationSet(np.array([[1.0, 2.0]]), np.array([5.0]))
    w = smooth_weights(agg, np.array([1.0, 2.0]), 0.0, SmoothingParams(1.0, SUM))
    assert w[0] == pytest.approx(1 / 3)  # exp(0) / (exp(0) + 2)


def test_smooth_weights_increase_with_epsilon():
    rng = np.random.default_rng(2)
    agg, _ = _random_instance(rng, l=6, M=3)
    q = rng.normal(size=3)
    sm = SmoothingParams(5.0, SUM)
    w1 = smooth_weights(agg, q, 0.3, sm)
    w2 = smooth_weights(agg, q, 0.9, sm)
    assert np.all(w2 > w1)


def test_smooth_weights_near_indicator_at_large_beta():
    rng = np.random.default_rng(3)
    sm = SmoothingParams(1e4, MAX)
    for _ in range(10):
        agg, _ = _random_instance(rng, l=6, M=2)
        q = rng.normal(size=2)
        eps = float(rng.uniform(0.2, 1.5))
        maxdiff = np.abs(agg.machine_preds - q).max(axis=1)
        if np.any(np.abs(maxdiff - eps) < 0.01):
            continue  # stay off the boundary
        w = smooth_weights(agg, q, eps, sm)
        indicator = (maxdiff <= eps).astype(float)
        assert w == pytest.approx(indicator, abs=1e-6)


def test_smooth_predict_single_row():
    agg = AggregationSet(np.array([[0.4, 1.1]]), np.array([7.25]))
    for eps, beta in ((0.0, 1.0), (2.0, 30.0)):
        assert smooth_predict(agg, np.zeros(2), eps, SmoothingParams(beta, SUM)) == 7.25


def test_smooth_predict_equidistant_rows_mean():
    # same max-diff for every row -> equal weights -> unweighted mean
    agg = AggregationSet(np.array([[1.0, 0.0], [-1.0, 0.3], [0.2, -1.0]]),
                         np.array([3.0, 6.0, 12.0]))
    p = smooth_predict(agg, np.zeros(2), 0.5, SmoothingParams(7.0, MAX))
    assert p == pytest.approx(7.0)


def test_smooth_predict_within_response_range():
    rng = np.random.default_rng(4)
    for _ in range(30):
        agg, _ = _random_instance(rng)
        q = rng.normal(size=agg.n_machines)
        p = smooth_predict(agg, q, float(rng.uniform(0, 2)),
                           SmoothingParams(float(rng.uniform(0.1, 50)), rng.choice([SUM, MAX])))
        assert agg.responses.min() - 1e-9 <= p <= agg.responses.max() + 1e-9


def test_smooth_predict_matches_discrete_at_large_beta():
    rng = np.random.default_rng(5)
    sm = SmoothingParams(1e4, MAX)
    checked = 0
    while checked < 10:
        agg, _ = _random_instance(rng, l=5, M=2)
        q = rng.normal(size=2)
        eps = float(rng.uniform(0.2, 1.5))
        maxdiff = np.abs(agg.machine_preds - q).max(axis=1)
        if np.any(np.abs(maxdiff - eps) < 0.01) or not np.any(maxdiff <= eps):
            continue
        assert smooth_predict(agg, q, eps, sm) == pytest.approx(
            predict_discrete(agg, q, CobraParams(eps)), abs=1e-5)
        checked += 1


# --------------------------------------------------- loss and gradient

def test_squared_loss_zero_when_targets_match():
    rng = np.random.default_rng(6)
    agg, tun = _random_instance(rng, l=6, M=2, n=4)
    sm = SmoothingParams(3.0, SUM)
    preds = [smooth_predict(agg, tun.machine_preds[j], 0.7, sm) for j in range(4)]
    matched = TuningSet(tun.machine_preds, np.array(preds))
    assert squared_loss(matched, agg, 0.7, sm) == pytest.approx(0.0, abs=1e-20)


def test_squared_loss_single_row_residual():
    agg = AggregationSet(np.array([[0.0]]), np.array([2.0]))
    tun = TuningSet(np.array([[0.0]]), np.array([5.0]))
    # single response means the prediction is exactly 2.0, residual -3
    assert squared_loss(tun, agg, 0.4, SmoothingParams(2.0, SUM)) == pytest.approx(9.0)


def test_squared_loss_compositional():
    rng = np.random.default_rng(7)
    agg, tun = _random_instance(rng, l=7, M=3, n=6)
    sm = SmoothingParams(8.0, MAX)
    direct = sum((smooth_predict(agg, tun.machine_preds[j], 0.5, sm) - tun.targets[j]) ** 2
                 for j in range(6))
    assert squared_loss(tun, agg, 0.5, sm) == direct


def test_gradient_zero_at_matched_targets():
    rng = np.random.default_rng(8)
    agg, tun = _random_instance(rng, l=5, M=2, n=3)
    sm = SmoothingParams(4.0, SUM)
    preds = [smooth_predict(agg, tun.machine_preds[j], 0.6, sm) for j in range(3)]
    matched = TuningSet(tun.machine_preds, np.array(preds))
    assert loss_gradient(matched, agg, 0.6, sm) == 0.0


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(9)
    h = 1e-5
    for variant in (SUM, MAX):
        for beta in (1.0, 10.0):
            for _ in range(6):
                agg, tun = _random_instance(rng)
                sm = SmoothingParams(beta, variant)
                eps = float(rng.uniform(0.1, 1.5))
                g = loss_gradient(tun, agg, eps, sm)
                fd = (squared_loss(tun, agg, eps + h, sm)
                      - squared_loss(tun, agg, eps - h, sm)) / (2 * h)
                assert abs(g - fd) <= 1e-5 * max(1.0, abs(g))


def test_gradient_vanishes_as_beta_to_zero():
    rng = np.random.default_rng(10)
    agg, tun = _random_instance(rng, l=6, M=2, n=5)
    assert abs(loss_gradient(tun, agg, 0.8, SmoothingParams(1e-8, SUM))) < 1e-6


# ---------------------------------------------------------------- tuner

def test_tuner_stops_immediately_at_stationary_point():
    rng = np.random.default_rng(11)
    agg, tun = _random_instance(rng, l=5, M=2, n=4)
    sm = SmoothingParams(4.0, SUM)
    preds = [smooth_predict(agg, tun.machine_preds[j], 0.6, sm) for j in range(4)]
    matched = TuningSet(tun.machine_preds, np.array(preds))
    trace = tune_epsilon(matched, agg, sm, GradientDescentConfig(0.6))
    assert trace.reason is TerminationReason.GRAD_TOL
    assert len(trace.records) == 1
    assert trace.epsilon_star == 0.6


def test_tuner_finds_dense_grid_minimum():
    # responses track a latent signal the machines also see, so local
    # averaging at a moderate radius beats both tiny and huge epsilon
    rng = np.random.default_rng(5)
    latent_a = rng.uniform(0, 4, size=8)
    agg = AggregationSet(np.column_stack([latent_a + 0.3 * rng.normal(size=8),
                                          latent_a + 0.3 * rng.normal(size=8)]),
                         latent_a + 0.2 * rng.normal(size=8))
    latent_t = rng.uniform(0, 4, size=8)
    tun = TuningSet(np.column_stack([latent_t + 0.3 * rng.normal(size=8),
                                     latent_t + 0.3 * rng.normal(size=8)]),
                    latent_t + 0.2 * rng.normal(size=8))
    sm = SmoothingParams(2.0, SUM)
    ladder = np.linspace(0.0, 3.0, 601)
    losses = scan_loss(tun, agg, ladder, sm)
    k = int(np.argmin(losses))
    assert 0 < k < 600, "instance must have an interior minimum"
    start = float(ladder[k]) + 0.25  # descend into the basin from one side
    trace = tune_epsilon(tun, agg, sm, GradientDescentConfig(start, learning_rate=0.05))
    assert abs(trace.epsilon_star - ladder[k]) <= 0.005  # within grid resolution
    assert trace.reason is not TerminationReason.MAX_ITERS


def test_tuner_projects_onto_nonnegative():
    rng = np.random.default_rng(14)
    agg, tun = _random_instance(rng, l=6, M=2, n=5)
    sm = SmoothingParams(6.0, SUM)
    trace = tune_epsilon(tun, agg, sm, GradientDescentConfig(0.05, learning_rate=2.0))
    for eps, _, _ in trace.records:
        assert eps >= 0.0


def test_tuner_trace_length_bounded():
    rng = np.random.default_rng(15)
    agg, tun = _random_instance(rng, l=5, M=2, n=5)
    sm = SmoothingParams(10.0, MAX)
    cfg = GradientDescentConfig(1.0, max_iters=7, grad_tol=1e-15, step_tol=1e-15)
    trace = tune_epsilon(tun, agg, sm, cfg)
    assert len(trace.records) <= 8


def test_tuner_loss_never_increases_along_accepted_steps():
    rng = np.random.default_rng(16)
    agg, tun = _random_instance(rng, l=7, M=3, n=6)
    sm = SmoothingParams(5.0, SUM)
    trace = tune_epsilon(tun, agg, sm, GradientDescentConfig(1.2))
    losses = [sl for _, sl, _ in trace.records]
    for a, b in zip(losses, losses[1:]):
        assert b <= a + 1e-12


def test_config_validation():
    with pytest.raises(ValueError):
        GradientDescentConfig(-0.1)
    with pytest.raises(ValueError):
        GradientDescentConfig(1.0, learning_rate=0.0)
    with pytest.raises(ValueError):
        GradientDescentConfig(1.0, max_iters=0)


def test_smoothing_validation():
    with pytest.raises(ValueError):
        SmoothingParams(0.0)
    with pytest.raises(ValueError):
        SmoothingParams(float("inf"))


# ----------------------------------------------------- leave-one-out mode

def test_exclude_self_matches_row_deletion():
    rng = np.random.default_rng(17)
    P = rng.normal(size=(6, 3))
    y = rng.normal(size=6)
    agg = AggregationSet(P, y)
    tun = TuningSet(P, y)
    sm = SmoothingParams(4.0, SUM)
    manual = 0.0
    for j in range(6):
        keep = np.arange(6) != j
        reduced = AggregationSet(P[keep], y[keep])
        manual += (smooth_predict(reduced, P[j], 0.8, sm) - y[j]) ** 2
    assert squared_loss(tun, agg, 0.8, sm, exclude_self=True) == pytest.approx(manual, rel=1e-12)


def test_exclude_self_gradient_matches_finite_differences():
    rng = np.random.default_rng(18)
    h = 1e-5
    for variant in (SUM, MAX):
        for _ in range(6):
            P = rng.normal(size=(7, 2))
            y = rng.normal(size=7)
            agg = AggregationSet(P, y)
            tun = TuningSet(P, y)
            sm = SmoothingParams(float(rng.uniform(1, 10)), variant)
            eps = float(rng.uniform(0.2, 1.5))
            g = loss_gradient(tun, agg, eps, sm, exclude_self=True)
            fd = (squared_loss(tun, agg, eps + h, sm, exclude_self=True)
                  - squared_loss(tun, agg, eps - h, sm, exclude_self=True)) / (2 * h)
            assert abs(g - fd) <= 1e-5 * max(1.0, abs(g))


def test_exclude_self_breaks_self_matching_pull():
    # with self-pairs kept, a tiny epsilon looks perfect: every row
    # predicts its own response at distance 0
    rng = np.random.default_rng(19)
    P = rng.normal(size=(8, 2))
    y = rng.normal(size=8)
    agg = AggregationSet(P, y)
    tun = TuningSet(P, y)
    sm = SmoothingParams(40.0, SUM)
    paired = squared_loss(tun, agg, 1e-6, sm)
    loo = squared_loss(tun, agg, 1e-6, sm, exclude_self=True)
    assert paired < 0.05 * loo


def test_exclude_self_rejects_mismatched_rows():
    rng = np.random.default_rng(20)
    agg, _ = _random_instance(rng, l=5, M=2, n=5)
    tun = TuningSet(rng.normal(size=(4, 2)), rng.normal(size=4))
    with pytest.raises(ValueError):
        squared_loss(tun, agg, 0.5, SmoothingParams(2.0, SUM), exclude_self=True)


def test_exclude_self_needs_two_rows():
    agg = AggregationSet(np.array([[1.0]]), np.array([0.5]))
    tun = TuningSet(np.array([[1.0]]), np.array([0.5]))
    with pytest.raises(ValueError):
        loss_gradient(tun, agg, 0.5, SmoothingParams(2.0, SUM), exclude_self=True)


def test_tune_epsilon_exclude_self_runs_leave_one_out():
    rng = np.random.default_rng(21)
    latent = rng.uniform(0, 4, size=10)
    P = np.column_stack([latent + 0.3 * rng.normal(size=10),
                         latent + 0.3 * rng.normal(size=10)])
    y = latent + 0.2 * rng.normal(size=10)
    agg = AggregationSet(P, y)
    tun = TuningSet(P, y)
    sm = SmoothingParams(2.0, SUM)
    trace = tune_epsilon(tun, agg, sm, GradientDescentConfig(1.0), exclude_self=True)
    assert trace.epsilon_star >= 0.0
    ladder = np.linspace(0.0, 3.0, 301)
    losses = scan_loss(tun, agg, ladder, sm, exclude_self=True)
    # the descent endpoint should not be worse than the coarse landscape floor
    end_loss = squared_loss(tun, agg, trace.epsilon_star, sm, exclude_self=True)
    assert end_loss <= float(losses.min()) * 1.5
