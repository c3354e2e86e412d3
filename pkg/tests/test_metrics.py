import time

import numpy as np
import pytest

from cobrabench.metrics import evaluate, mse, r2, timed


def test_mse_perfect():
    assert mse([1.0, 2.0], [1.0, 2.0]) == 0.0


def test_mse_hand_value():
    assert mse([1, 2, 3], [1, 2, 4]) == pytest.approx(1.0 / 3.0)


def test_mse_permutation_invariant():
    rng = np.random.default_rng(0)
    t = rng.normal(size=20)
    p = rng.normal(size=20)
    perm = rng.permutation(20)
    assert mse(t, p) == pytest.approx(mse(t[perm], p[perm]))


def test_mse_errors():
    with pytest.raises(ValueError):
        mse([1.0], [1.0, 2.0])
    with pytest.raises(ValueError):
        mse([], [])


def test_r2_perfect():
    assert r2([1, 2, 3], [1, 2, 3]) == 1.0


def test_r2_mean_predictor_zero():
    y = np.array([3.0, 5.0, 10.0, 2.0])
    assert r2(y, np.full(4, y.mean())) == pytest.approx(0.0, abs=1e-15)


def test_r2_hand_value():
    assert r2([1, 2, 3], [1, 2, 4]) == pytest.approx(0.5)


def test_r2_zero_variance_rejected():
    with pytest.raises(ValueError):
        r2([2.0, 2.0, 2.0], [1.0, 2.0, 3.0])


def test_r2_mse_identity():
    rng = np.random.default_rng(1)
    t = rng.normal(size=30)
    p = t + 0.3 * rng.normal(size=30)
    ss_tot = np.sum((t - t.mean()) ** 2)
    assert r2(t, p) == pytest.approx(1.0 - 30 * mse(t, p) / ss_tot)


def test_r2_never_above_one():
    rng = np.random.default_rng(2)
    for _ in range(20):
        t = rng.normal(size=10)
        p = rng.normal(size=10)
        assert r2(t, p) <= 1.0
        assert mse(t, p) >= 0.0


def test_evaluate_report():
    rep = evaluate([1.0, 2.0, 3.0], [1.0, 2.0, 4.0])
    assert rep.n == 3
    assert rep.mse == pytest.approx(1.0 / 3.0)
    assert rep.r2 == pytest.approx(0.5)


def test_timed_noop_fast():
    _, dt = timed(lambda: None)
    assert dt < 0.05


def test_timed_sleep_calibration():
    _, dt = timed(lambda: time.sleep(0.1))
    assert 0.08 <= dt <= 0.5  # generous scheduler jitter allowance
    # millisecond resolution: no sub-millisecond digits survive rounding
    assert round(dt * 1000) == pytest.approx(dt * 1000, abs=1e-9)


def test_timed_returns_result():
    val, _ = timed(lambda: 42)
    assert val == 42


def test_timed_propagates_errors():
    with pytest.raises(RuntimeError):
        timed(lambda: (_ for _ in ()).throw(RuntimeError("boom")))
