import numpy as np
import pytest

from wesbench.exceptions import ConfigurationError, DimensionMismatchError, MissingWeightsError, NonFiniteLossError
from wesbench.losses import LossKind, LossSpec, batch_grad, loss_value
from wesbench.network import (
    AdamState, Architecture, MlpParams, TrainConfig, adam_step, backward, forward, init_params, load_model,
    predict, save_model, split_indices, train,
)
from wesbench.signals import cosine_coefficients, select_harmonics, synthesize_features
from wesbench.weighting import build_weighting_curve

SMALL = Architecture((2, 3, 1))


def _numeric_grads(params, x, y, loss, weights, h=1e-6):
    grads = MlpParams.zeros(SMALL)
    for group, target in ((params.weights, grads.weights), (params.biases, grads.biases)):
        for array, out in zip(group, target):
            for index in np.ndindex(array.shape):
                saved = array[index]
                array[index] = saved + h
                plus = loss_value(loss, forward(params, x).output, y, weights)
                array[index] = saved - h
                minus = loss_value(loss, forward(params, x).output, y, weights)
                array[index] = saved
                out[index] = (plus - minus) / (2 * h)
    return grads


ALL_LOSSES = [
    "mse", "mae", "huber:0.5", "huber:5.0", "huber:10.0", "logcosh", "quantile:0.25", "quantile:0.75", "wes:8.0",
]


def _near_kink(loss, errors, margin=1e-4):
    if loss.kind in (LossKind.MAE, LossKind.QUANTILE):
        return bool(np.any(np.abs(errors) < margin))
    if loss.kind is LossKind.HUBER:
        return bool(np.any(np.abs(np.abs(errors) - loss.param) < margin))
    return False


@pytest.mark.parametrize("loss_id", ALL_LOSSES)
def test_backward_matches_finite_differences(loss_id):
    loss = LossSpec.from_id(loss_id)
    rng = np.random.default_rng(11)
    checked = 0
    for draw in range(20):
        params = init_params(SMALL, seed=draw)
        x = rng.uniform(-1, 1, size=(8, 2))
        y = rng.uniform(0, 1, size=8)
        weights = rng.uniform(1, 8, size=8) if loss_id.startswith("wes") else None
        acts = forward(params, x)
        if _near_kink(loss, acts.output - y):
            continue
        analytic = backward(params, acts, batch_grad(loss, acts.output, y, weights))
        numeric = _numeric_grads(params.copy(), x, y, loss, weights)
        for a, n in zip(analytic.arrays(), numeric.arrays()):
            np.testing.assert_allclose(a, n, rtol=1e-5, atol=1e-7)
        checked += 1
    assert checked >= 15


def test_forward_shapes_and_linear_output():
    params = MlpParams.zeros(SMALL)
    params.biases[-1][:] = 0.7
    acts = forward(params, np.ones((4, 2)))
    assert [a.shape for a in acts.a] == [(4, 2), (4, 3), (4, 1)]
    np.testing.assert_allclose(acts.a[1], 0.5)
    np.testing.assert_allclose(acts.output, 0.7)
    assert forward(params, [0.2, 0.4]).output.shape == (1,)


def test_forward_rejects_wrong_width():
    with pytest.raises(DimensionMismatchError):
        forward(init_params(SMALL, 0), np.ones((3, 5)))


def test_backward_rejects_foreign_activations():
    params = init_params(SMALL, 0)
    other = init_params(Architecture((4, 3, 1)), 0)
    acts = forward(other, np.ones((2, 4)))
    with pytest.raises(DimensionMismatchError):
        backward(params, acts, np.ones(2))


def _gradient(params, x, y, loss):
    acts = forward(params, x)
    return backward(params, acts, batch_grad(loss, acts.output, y))


def test_batch_gradient_is_mean_of_sample_gradients():
    rng = np.random.default_rng(3)
    params = init_params(SMALL, 1)
    loss = LossSpec.from_id("logcosh")
    x = rng.uniform(-1, 1, size=(4, 2))
    y = rng.uniform(0, 1, size=4)
    batch = _gradient(params, x, y, loss)
    singles = [_gradient(params, x[i:i + 1], y[i:i + 1], loss) for i in range(4)]
    for index, array in enumerate(batch.arrays()):
        mean = np.mean([list(single.arrays())[index] for single in singles], axis=0)
        assert np.max(np.abs(array - mean)) < 1e-12


def test_full_gradient_is_average_of_disjoint_batches():
    rng = np.random.default_rng(4)
    params = init_params(Architecture((5, 25, 25, 25, 5, 1)), 2)
    loss = LossSpec.from_id("mse")
    x = rng.uniform(-1, 1, size=(12, 5))
    y = rng.uniform(0, 1, size=12)
    full = _gradient(params, x, y, loss)
    batches = [_gradient(params, x[i:i + 4], y[i:i + 4], loss) for i in (0, 4, 8)]
    for index, array in enumerate(full.arrays()):
        mean = np.mean([list(batch.arrays())[index] for batch in batches], axis=0)
        np.testing.assert_allclose(array, mean, rtol=0, atol=1e-10)


def test_zero_output_gradient_gives_zero_gradients():
    params = init_params(SMALL, 0)
    acts = forward(params, np.random.default_rng(5).uniform(-1, 1, size=(6, 2)))
    grads = backward(params, acts, np.zeros(6))
    assert all(not np.any(array) for array in grads.arrays())


def test_init_draws_are_standard_normal():
    draws = init_params(Architecture((100, 100, 1)), 0).weights[0].ravel()
    assert draws.size == 10000
    assert -0.05 <= draws.mean() <= 0.05
    assert 0.97 <= draws.std(ddof=1) <= 1.03


def test_init_params_is_seeded():
    a = init_params(Architecture(), 3)
    assert a.layer_sizes == (5, 25, 25, 25, 5, 1)
    assert a.equals(init_params(Architecture(), 3))
    assert not a.equals(init_params(Architecture(), 4))


def test_first_adam_step_moves_by_learning_rate():
    params = init_params(SMALL, 0)
    before = params.copy()
    grads = params.map(params, lambda p, _: np.where(p > 0, 2.0, -0.5))
    state, updated = adam_step(AdamState.initial(SMALL), params, grads, lr=0.01)
    assert state.step_count == 1
    assert params.equals(before)
    for new, old, g in zip(updated.arrays(), before.arrays(), grads.arrays()):
        np.testing.assert_allclose(new, old - 0.01 * np.sign(g), atol=1e-9)


def test_zero_learning_rate_keeps_params():
    params = init_params(SMALL, 0)
    grads = params.map(params, lambda p, _: np.ones_like(p))
    state, updated = adam_step(AdamState.initial(SMALL), params, grads, lr=0.0)
    assert state.step_count == 1
    assert updated.equals(params)


def test_split_indices():
    train_idx, hold_idx = split_indices(100, 0.2, seed=5)
    assert len(train_idx) == 80
    assert len(hold_idx) == 20
    assert set(train_idx) | set(hold_idx) == set(range(100))
    np.testing.assert_array_equal(hold_idx, split_indices(100, 0.2, seed=5)[1])
    assert len(split_indices(100, 0.0, seed=5)[1]) == 0


def _dataset(curve, n_terms=20):
    harmonics = select_harmonics(cosine_coefficients(curve, n_terms), 5)
    return synthesize_features(harmonics, curve.grid, curve.domain_length)


def test_train_history_and_determinism(small_curve):
    features = _dataset(small_curve)
    config = TrainConfig(learning_rate=0.01, batch_size=64, epochs=15, seed=9)
    model = train(features, small_curve, LossSpec.from_id("mse"), config)
    again = train(features, small_curve, LossSpec.from_id("mse"), config)
    assert len(model.train_history) == 16
    assert len(model.holdout_history) == 16
    assert model.final_train_loss < model.train_history[0]
    assert model.params.equals(again.params)
    assert len(model.holdout_indices) == 160
    assert predict(model, features).shape == (800,)


def test_train_with_zero_learning_rate_keeps_initial_params(small_curve):
    features = _dataset(small_curve)
    config = TrainConfig(learning_rate=0.0, batch_size=64, epochs=1, seed=7)
    model = train(features, small_curve, LossSpec.from_id("mse"), config)
    assert model.params.equals(init_params(config.architecture, 7))
    assert model.train_history[1] == model.train_history[0]


def test_train_wes_needs_weighting(small_curve):
    features = _dataset(small_curve)
    config = TrainConfig(batch_size=64, epochs=1)
    with pytest.raises(MissingWeightsError):
        train(features, small_curve, LossSpec.from_id("wes:4.0"), config)
    loss = LossSpec.from_id("wes:4.0").bind(build_weighting_curve(small_curve.values, 4.0, bins=20, degree=6))
    assert len(train(features, small_curve, loss, config).train_history) == 2


def test_train_width_mismatch(small_curve):
    features = _dataset(small_curve)
    config = TrainConfig(epochs=1, layer_sizes=(4, 3, 1))
    with pytest.raises(DimensionMismatchError):
        train(features, small_curve, LossSpec.from_id("mse"), config)


def test_train_stops_on_nan(small_curve):
    features = _dataset(small_curve).rows.copy()
    features[3, 0] = np.nan
    with pytest.raises(NonFiniteLossError) as info:
        train(features, small_curve.values, LossSpec.from_id("mse"), TrainConfig(epochs=1, holdout_fraction=0.0))
    assert info.value.epoch == 1


def test_model_file_round_trip(tmp_path, small_curve):
    features = _dataset(small_curve)
    model = train(features, small_curve, LossSpec.from_id("mae"), TrainConfig(batch_size=128, epochs=1))
    loaded = load_model(save_model(model, tmp_path / "model.txt"))
    assert loaded.architecture == model.architecture
    np.testing.assert_array_equal(predict(loaded, features), predict(model, features))


def test_load_model_rejects_foreign_file(tmp_path):
    path = tmp_path / "model.txt"
    path.write_text("something-else 1\n2 1\n")
    with pytest.raises(ConfigurationError):
        load_model(path)


@pytest.mark.parametrize(
    "kwargs",
    [{"learning_rate": -0.1}, {"batch_size": 0}, {"epochs": 0}, {"holdout_fraction": 1.0}],
)
def test_train_config_validation(kwargs):
    with pytest.raises(ConfigurationError):
        TrainConfig(**kwargs)


def test_architecture_validation():
    with pytest.raises(ConfigurationError):
        Architecture((5, 3, 2))
    with pytest.raises(ConfigurationError):
        Architecture((1,))
    assert Architecture((5, 1)).shapes == [(1, 5)]
