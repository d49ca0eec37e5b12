import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pdcpd.errors import ConfigurationError, TrainingError
from pdcpd.narx import (
    NarxConfig,
    NarxModel,
    design_matrix,
    discretize,
    gradient_check,
    gradient_norm,
    kfold_tune,
    make_batch,
    predict,
    train,
    train_many,
    untrained_model,
    windowed_accuracy,
)


def copy_task(T=500, seed=0):
    """y(t) = u_1(t-1): exactly representable by the delay structure."""
    rng = np.random.default_rng(seed)
    u = rng.uniform(-1, 1, size=(T, 2))
    y = np.r_[0.0, u[:-1, 0]]
    return u, y


# ---------------------------------------------------------------- configuration


def test_case_study_input_dimension():
    cfg = NarxConfig()
    assert cfg.input_dim(6) == 14
    u = np.random.default_rng(0).normal(size=(144, 6))
    y = np.r_[np.ones(60), 3 * np.ones(60), 2 * np.ones(24)]
    assert untrained_model(u, y, cfg).W1.shape == (14, 5)


@pytest.mark.parametrize("kw", [dict(input_delays=(0, 1)), dict(hidden_size=0), dict(train_fraction=1.0),
                                dict(split="shuffled")])
def test_invalid_config(kw):
    with pytest.raises(ConfigurationError):
        NarxConfig(**kw)


def test_design_matrix_rows():
    u = np.arange(10.0)[:, None]
    y = 100 + np.arange(10.0)
    X, target = design_matrix(u, y, NarxConfig())
    # row for t = 2 holds u(1), u(0), y(1), y(0)
    assert list(X[0]) == [1.0, 0.0, 101.0, 100.0] and target[0] == 102.0
    assert X.shape == (8, 4)


# ---------------------------------------------------------------- training


def test_zero_init_outputs_bias_everywhere():
    u, y = copy_task(100)
    m = untrained_model(u, y, NarxConfig(init="zeros"))
    m.b2 = 0.25
    pred = predict(m, u, y)
    assert np.allclose(pred[2:], m.denormalize_labels(0.25))


def test_hand_set_weights_solve_copy_task():
    # with tanh, a tiny input weight makes the unit nearly linear: W2 * tanh(a x) / a ~ x
    u, y = copy_task(500)
    m = untrained_model(u, y, NarxConfig(hidden_size=1, init="zeros"))
    a = 1e-4
    # identity on normalized scale, expressed through the stored stats
    m.W1[0, 0] = a * m.u_std[0] ** -1 * m.u_std[0]
    X, target = make_batch(m, u, y)
    scale = m.u_std[0] / m.y_std
    m.W2[0] = scale / a
    m.b2 = (m.u_mean[0] - m.y_mean) / m.y_std
    out = m.W2[0] * np.tanh(X[:, 0] * m.W1[0, 0]) + m.b2
    assert np.mean((out - target) ** 2) < 1e-6


def test_copy_task_is_learned():
    u, y = copy_task(500)
    m = train(u, y, NarxConfig(), seed=1)
    assert m.val_mse < 1e-3
    assert m.train_mse < 1e-3


def test_linear_target_recovery():
    rng = np.random.default_rng(4)
    u = rng.normal(size=(400, 3))
    y = np.r_[0.0, 0.0, 2.0 * u[:-2, 1] - 1.0]
    m = train(u, y, NarxConfig(epochs=1500, patience=100), seed=3)
    assert m.train_mse < 1e-3


def test_training_is_deterministic():
    u, y = copy_task(200)
    a, b = train(u, y, seed=7), train(u, y, seed=7)
    assert np.array_equal(a.W1, b.W1) and np.array_equal(a.W2, b.W2) and a.b2 == b.b2


def test_batched_training_equals_individual():
    u, y = copy_task(200)
    u2, y2 = copy_task(200, seed=5)
    cfg = NarxConfig(epochs=50)
    both = train_many([u, u2], [y, y2], cfg, [3, 3])
    solo = train_many([u2], [y2], cfg, [3])[0]
    np.testing.assert_allclose(both[1].W1, solo.W1, rtol=1e-12, atol=1e-14)


def test_non_finite_inputs_rejected():
    u, y = copy_task(100)
    u[5, 0] = np.nan
    with pytest.raises(TrainingError):
        train(u, y)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_divergence_reports_seed():
    u, y = copy_task(100)
    with pytest.raises(TrainingError, match="seed=42"):
        train(u * 1e200, y, NarxConfig(optimizer="adam", learning_rate=1e300, epochs=5), seed=42)


def test_too_short_series_rejected():
    with pytest.raises(ConfigurationError):
        train(np.zeros((10, 2)), np.zeros(10))


def test_trained_gradient_smaller_than_initial():
    u, y = copy_task(300)
    m0 = untrained_model(u, y, seed=2)
    m1 = train(u, y, seed=2)
    assert gradient_norm(m1, make_batch(m1, u, y)) < gradient_norm(m0, make_batch(m0, u, y))


def test_model_json_round_trip(tmp_path):
    u, y = copy_task(100)
    m = train(u, y, NarxConfig(epochs=20), seed=1)
    m.save(tmp_path / "m.json")
    back = NarxModel.load(tmp_path / "m.json")
    for k in ("W1", "b1", "W2", "u_mean", "u_std"):
        assert np.array_equal(getattr(m, k), getattr(back, k))
    assert back.b2 == m.b2 and back.config == m.config


def test_normalization_round_trip():
    u, y = copy_task(100)
    m = untrained_model(u, y)
    assert np.allclose(m.denormalize_features(m.normalize_features(u)), u, atol=1e-12, rtol=0)
    assert np.allclose(m.denormalize_labels(m.normalize_labels(y)), y, atol=1e-12, rtol=0)


# ---------------------------------------------------------------- k-fold tuning


def test_kfold_singleton_grid():
    u, y = copy_task(100)
    cfg = NarxConfig(epochs=10)
    assert kfold_tune(u, y, [cfg], k=3) is cfg


def test_kfold_prefers_capacity_for_nonlinear_target():
    rng = np.random.default_rng(0)
    u = rng.uniform(-2, 2, size=(400, 1))
    # |u| needs two tanh units
    y = np.r_[0.0, np.abs(u[:-1, 0])]
    small, big = NarxConfig(hidden_size=1, epochs=400), NarxConfig(hidden_size=5, epochs=400)
    assert kfold_tune(u, y, [small, big], k=5, seed=1) is big


def test_kfold_any_k_returns_grid_member():
    u, y = copy_task(120)
    grid = [NarxConfig(epochs=5), NarxConfig(hidden_size=2, epochs=5)]
    assert kfold_tune(u, y, grid, k=2) in grid and kfold_tune(u, y, grid, k=5) in grid


def test_kfold_empty_grid():
    u, y = copy_task(100)
    with pytest.raises(ConfigurationError):
        kfold_tune(u, y, [])


# ---------------------------------------------------------------- prediction


def test_teacher_forced_prediction_reproduces_training_mse():
    u, y = copy_task(200)
    cfg = NarxConfig(train_fraction=0.5, epochs=30)
    m = train(u, y, cfg, seed=0)
    pred = predict(m, u, y)
    # chronological split: the first half of the rows are the training rows
    n_train = int(math.floor(0.5 * (200 - 2)))
    mse = np.mean((pred[2 : 2 + n_train] - y[2 : 2 + n_train]) ** 2)
    assert mse == pytest.approx(m.train_mse, rel=1e-9)


def test_constant_inputs_give_constant_prediction():
    u = np.ones((100, 3))
    y = np.full(100, 2.0)
    m = train(u, y, NarxConfig(epochs=20), seed=0)
    assert np.std(predict(m, u, y)) < 1e-6


def test_feature_perturbation_is_local():
    u, y = copy_task(60)
    m = train(u, y, NarxConfig(epochs=20), seed=0)
    base = predict(m, u, y)
    u2 = u.copy()
    u2[30, 1] += 5.0
    diff = np.flatnonzero(np.abs(predict(m, u2, y) - base) > 0)
    assert set(diff) <= {31, 32} and len(diff) > 0


def test_first_outputs_copy_teacher():
    u, y = copy_task(60)
    m = untrained_model(u, y)
    assert list(predict(m, u, y)[:2]) == list(y[:2])


def test_closed_loop_runs_and_differs():
    u, y = copy_task(60)
    m = train(u, y, NarxConfig(epochs=10), seed=0)
    closed = predict(m, u, y, closed_loop=True)
    assert closed.shape == y.shape and np.all(np.isfinite(closed))


def test_predict_shape_mismatch():
    u, y = copy_task(60)
    m = untrained_model(u, y)
    with pytest.raises(ConfigurationError):
        predict(m, u[:50], y)


# ---------------------------------------------------------------- discretize / accuracy


def test_discretize_examples():
    assert list(discretize([1.49, 1.5, 3.7, 0.2, 2.5])) == [1, 2, 3, 1, 3]


def test_worked_window_example():
    sim = np.r_[np.ones(32), 2 * np.ones(64)]
    pred = np.r_[np.ones(34), 2 * np.ones(62)]  # 30 min late on a 15-min grid
    full = np.mean(pred == sim)
    assert full == 94 / 96 and round(full, 2) == 0.98
    rep = windowed_accuracy(pred, sim, [32], 10, interval_min=15)
    assert rep.windowed_accuracy == 18 / 20
    assert rep.abs_time_deviation_min == 30.0 and rep.predicted_cp_times == (34 * 15,)


def test_identical_series_perfect():
    s = np.r_[np.ones(50), 3 * np.ones(50), 2 * np.ones(44)]
    rep = windowed_accuracy(s, s, [50, 100], 12, interval_min=10)
    assert rep.windowed_accuracy == 1.0 and rep.abs_time_deviation_min == 0.0 and rep.mse == 0.0


def test_no_transition_scores_half_width():
    sim = np.r_[np.ones(50), 2 * np.ones(50)]
    rep = windowed_accuracy(np.ones(100), sim, [50], 5, interval_min=10)
    assert rep.abs_time_deviation_min == 50.0 and rep.no_transition == (50,)
    assert math.isnan(rep.predicted_cp_times[0])


def test_window_truncated_at_edges_and_empty_rejected():
    s = np.r_[np.ones(3), 2 * np.ones(7)]
    assert windowed_accuracy(s, s, [3], 10).windowed_accuracy == 1.0
    with pytest.raises(ValueError):
        windowed_accuracy(s, s, [3], 0)


@given(st.integers(1, 6), st.integers(0, 6), st.integers(30, 90))
def test_shifted_prediction_accuracy(h_extra, w, c):
    h = w + h_extra
    T = 144
    sim = np.r_[np.ones(c), 2 * np.ones(T - c)]
    pred = np.r_[np.ones(c + w), 2 * np.ones(T - c - w)]
    rep = windowed_accuracy(pred, sim, [c], h)
    assert rep.windowed_accuracy == pytest.approx(1 - w / (2 * h))
    assert rep.abs_time_deviation_min == w


@given(st.lists(st.integers(1, 3), min_size=20, max_size=80), st.data())
def test_identical_inputs_any_window(levels, data):
    s = np.asarray(levels)
    c = data.draw(st.integers(0, s.size - 1))
    h = data.draw(st.integers(1, 20))
    assert windowed_accuracy(s, s, [c], h).windowed_accuracy == 1.0


# ---------------------------------------------------------------- gradient check


def test_gradient_check_random_models():
    rng = np.random.default_rng(0)
    worst = 0.0
    for i in range(10):
        m_feat = int(rng.integers(1, 7))
        cfg = NarxConfig(hidden_size=int(rng.integers(1, 8)))
        u = rng.normal(size=(40, m_feat))
        y = rng.integers(1, 4, size=40).astype(float)
        m = untrained_model(u, y, cfg, seed=i)
        worst = max(worst, gradient_check(m, make_batch(m, u, y)))
    assert worst < 1e-4


def test_gradient_check_zero_model():
    u, y = copy_task(40)
    m = untrained_model(u, y, NarxConfig(init="zeros"))
    assert gradient_check(m, make_batch(m, u, y)) < 1e-4


@settings(max_examples=20)
@given(st.integers(0, 2**32))
def test_gradient_check_property(seed):
    rng = np.random.default_rng(seed)
    u = rng.normal(size=(30, 3))
    y = rng.normal(size=30)
    m = untrained_model(u, y, NarxConfig(hidden_size=3), seed=seed)
    assert gradient_check(m, make_batch(m, u, y)) < 1e-4
