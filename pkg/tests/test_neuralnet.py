import math

import numpy as np
import pytest

from roughcast.errors import (
    BatchTooSmallError,
    ConfigError,
    DivergenceError,
    SchemaError,
    ValidationError,
)
from roughcast.neuralnet import (
    MetricsReport,
    MlpConfig,
    MlpModel,
    clip_global_norm,
    compute_metrics,
    forward,
    gradient_check,
    init_mlp,
    loss_and_grads,
    train_mlp,
)


def small_config(**overrides):
    base = dict(hidden_widths=(8, 5), activation="tanh", dropout_rate=0.0,
                learning_rate=1e-3, batch_size=8, max_epochs=20,
                early_stop_patience=5, seed=7)
    base.update(overrides)
    return MlpConfig(**base)


# ---------------------------------------------------------------- init


def test_init_layer_shapes():
    model = init_mlp(MlpConfig(hidden_widths=(64, 32)), input_dim=8)
    shapes = [layer.W.shape for layer in model.layers]
    assert shapes == [(8, 64), (64, 32), (32, 1)]


def test_init_seeded_bit_identical():
    a = init_mlp(small_config(), 8)
    b = init_mlp(small_config(), 8)
    for la, lb in zip(a.layers, b.layers):
        assert np.array_equal(la.W, lb.W)
        assert np.array_equal(la.b, lb.b)


def test_init_zero_input_gives_zero_output():
    model = init_mlp(MlpConfig(hidden_widths=(4,), seed=13), input_dim=8)
    out = forward(model, np.zeros((1, 8)), mode="eval")
    assert out[0] == 0.0


def test_empty_hidden_widths_rejected():
    with pytest.raises(ConfigError):
        MlpConfig(hidden_widths=())


def test_config_bounds_enforced():
    with pytest.raises(ConfigError):
        MlpConfig(dropout_rate=0.95)
    with pytest.raises(ConfigError):
        MlpConfig(learning_rate=0.0)
    with pytest.raises(ConfigError):
        MlpConfig(activation="sigmoid")
    with pytest.raises(ConfigError):
        MlpConfig(grad_clip_norm=0.0)


# ---------------------------------------------------------------- forward


def test_eval_forward_is_pure():
    model = init_mlp(small_config(), 4)
    X = np.random.default_rng(0).normal(size=(6, 4))
    a = forward(model, X, mode="eval")
    b = forward(model, X, mode="eval")
    assert np.array_equal(a, b)


def test_train_mode_single_row_rejected():
    model = init_mlp(small_config(), 4)
    with pytest.raises(BatchTooSmallError):
        forward(model, np.zeros((1, 4)), mode="train")


def test_wrong_width_rejected():
    model = init_mlp(small_config(), 4)
    with pytest.raises(SchemaError):
        forward(model, np.zeros((2, 5)), mode="eval")


def test_dropout_off_train_eval_differ_only_via_bn_source():
    # With running statistics forced equal to the batch statistics, the two
    # modes must agree exactly when dropout is off.
    model = init_mlp(small_config(dropout_rate=0.0), 4)
    X = np.random.default_rng(3).normal(size=(16, 4))
    a = X
    for layer in model.layers[:-1]:
        z = a @ layer.W + layer.b
        layer.running_mean[...] = z.mean(axis=0)
        layer.running_var[...] = z.var(axis=0)
        inv = 1 / np.sqrt(z.var(axis=0) + 1e-5)
        a = np.tanh(layer.gamma * (z - z.mean(axis=0)) * inv + layer.beta)
    train_out = forward(model, X, mode="train")
    eval_out = forward(model, X, mode="eval")
    assert np.allclose(train_out, eval_out, atol=1e-12)


def test_hand_traced_single_unit_forward():
    # 1 input -> 1 hidden unit -> 1 output with hand-set parameters.
    config = MlpConfig(hidden_widths=(1,), activation="tanh", dropout_rate=0.0)
    model = init_mlp(config, 1)
    hidden, head = model.layers
    hidden.W[...] = [[2.0]]
    hidden.b[...] = [0.5]
    hidden.gamma[...] = [1.5]
    hidden.beta[...] = [-0.25]
    hidden.running_mean[...] = [0.1]
    hidden.running_var[...] = [4.0]
    head.W[...] = [[3.0]]
    head.b[...] = [1.0]

    x = 0.7
    z = 2.0 * x + 0.5
    zhat = (z - 0.1) / math.sqrt(4.0 + 1e-5)
    h = math.tanh(1.5 * zhat - 0.25)
    expected = 3.0 * h + 1.0
    out = forward(model, [[x]], mode="eval")
    assert out[0] == pytest.approx(expected, abs=1e-12)


# ---------------------------------------------------------------- training


def test_linear_task_reaches_tight_mae():
    rng = np.random.default_rng(42)
    X = rng.uniform(0, 1, size=(200, 1))
    y = 2 * X.ravel() + 1
    config = MlpConfig(hidden_widths=(16,), activation="tanh", dropout_rate=0.0,
                       learning_rate=1e-2, batch_size=32, max_epochs=500,
                       early_stop_patience=60, seed=1)
    model = init_mlp(config, 1)
    best, report = train_mlp(model, X[:160], y[:160], X[160:], y[160:])
    assert report.best_val_mae < 0.05
    assert report.stopped_epoch <= 500


def test_zero_weights_leave_parameters_unchanged():
    config = small_config(max_epochs=3)
    model = init_mlp(config, 4)
    before = [p.copy() for p in model.parameters()]
    X = np.random.default_rng(1).normal(size=(20, 4))
    y = np.random.default_rng(2).normal(size=20)
    train_mlp(model, X, y, X[:4], y[:4], config, sample_weights=np.zeros(20))
    for prev, now in zip(before, model.parameters()):
        assert np.array_equal(prev, now)


def test_patience_one_constant_val_stops_at_epoch_two():
    # Zero sample weights freeze the model, so validation MAE is constant.
    config = small_config(max_epochs=50, early_stop_patience=1)
    model = init_mlp(config, 4)
    X = np.random.default_rng(1).normal(size=(12, 4))
    y = np.random.default_rng(2).normal(size=12)
    _, report = train_mlp(model, X, y, X, y, config, sample_weights=np.zeros(12))
    assert report.stopped_epoch == 2
    assert report.best_epoch == 1


def test_best_val_mae_is_min_of_curve():
    config = small_config(max_epochs=30)
    model = init_mlp(config, 4)
    rng = np.random.default_rng(5)
    X = rng.normal(size=(40, 4))
    y = X @ np.array([1.0, -2.0, 0.5, 0.0]) + 3
    _, report = train_mlp(model, X[:32], y[:32], X[32:], y[32:], config)
    assert report.best_val_mae == pytest.approx(min(report.val_mae), abs=0)
    assert report.val_mae[report.best_epoch - 1] == report.best_val_mae


def test_training_deterministic_given_seed():
    rng = np.random.default_rng(8)
    X = rng.normal(size=(50, 4))
    y = rng.normal(size=50)
    runs = []
    for _ in range(2):
        config = small_config(max_epochs=10, dropout_rate=0.3)
        model = init_mlp(config, 4)
        _, report = train_mlp(model, X[:40], y[:40], X[40:], y[40:], config)
        runs.append(report)
    assert runs[0].train_loss == runs[1].train_loss
    assert runs[0].val_mae == runs[1].val_mae
    assert runs[0].lr_trace == runs[1].lr_trace


@pytest.mark.filterwarnings("ignore:overflow", "ignore:invalid value")
def test_divergence_error_names_epoch():
    config = small_config(max_epochs=5, activation="relu")
    model = init_mlp(config, 4)
    model.layers[0].W[...] = 1e200  # forces overflow on the first batch
    X = np.ones((8, 4))
    y = np.ones(8)
    with pytest.raises(DivergenceError) as err:
        train_mlp(model, X, y, X, y, config)
    assert err.value.epoch == 1
    assert "epoch 1" in str(err.value)


def test_snapshot_returned_at_best_epoch():
    rng = np.random.default_rng(21)
    X = rng.normal(size=(60, 3))
    y = X @ np.array([2.0, 1.0, -1.0])
    config = small_config(max_epochs=40, early_stop_patience=40)
    model = init_mlp(config, 3)
    best, report = train_mlp(model, X[:48], y[:48], X[48:], y[48:], config)
    best_mae = float(np.mean(np.abs(best.predict(X[48:]) - y[48:])))
    assert best_mae == pytest.approx(report.best_val_mae, abs=1e-12)


# ---------------------------------------------------------------- clipping


def test_clip_global_norm_bounds():
    rng = np.random.default_rng(0)
    for _ in range(50):
        grads = [rng.normal(size=s) * rng.uniform(0.1, 100) for s in [(3, 4), (4,), (4, 1)]]
        pre, post = clip_global_norm(grads, 1.0)
        actual = math.sqrt(sum(float((g**2).sum()) for g in grads))
        assert post <= 1.0 + 1e-12
        assert actual <= 1.0 + 1e-12
        if pre <= 1.0:
            assert post == pre


def test_train_report_norms_respect_clip():
    config = small_config(max_epochs=8, grad_clip_norm=0.5)
    model = init_mlp(config, 4)
    rng = np.random.default_rng(4)
    X = rng.normal(size=(40, 4))
    y = 100 * rng.normal(size=40)  # big targets force clipping
    _, report = train_mlp(model, X[:32], y[:32], X[32:], y[32:], config)
    assert report.max_post_clip_norm <= 0.5 + 1e-12


# ---------------------------------------------------------------- weighted loss


def test_duplicate_sample_equals_double_weight():
    config = small_config()
    model = init_mlp(config, 4)
    rng = np.random.default_rng(11)
    X = rng.normal(size=(6, 4))
    y = rng.normal(size=6)

    X_dup = np.vstack([X, X[2:3]])
    y_dup = np.append(y, y[2])
    w_dup = np.ones(7)
    loss_dup, _, _ = loss_and_grads(model, X_dup, y_dup, w_dup, mode="eval")

    w_double = np.ones(6)
    w_double[2] = 2.0
    loss_double, _, _ = loss_and_grads(model, X, y, w_double, mode="eval")
    assert loss_dup == pytest.approx(loss_double, abs=1e-12)


# ---------------------------------------------------------------- gradients


def test_gradient_check_random_architectures():
    rng = np.random.default_rng(99)
    worst = 0.0
    for trial in range(20):
        n_layers = int(rng.integers(1, 4))
        widths = tuple(int(rng.integers(2, 12)) for _ in range(n_layers))
        activation = ("relu", "tanh", "elu")[trial % 3]
        config = MlpConfig(hidden_widths=widths, activation=activation,
                           dropout_rate=0.0, l2_strength=float(rng.uniform(0, 1e-3)),
                           seed=trial)
        model = init_mlp(config, 8)
        X = rng.normal(size=(9, 8))
        y = rng.normal(size=9)
        w = rng.uniform(0.2, 2.0, size=9)
        err = gradient_check(model, X, y, sample_weights=w, epsilon=1e-5,
                             max_checked=250, seed=trial)
        worst = max(worst, err)
    assert worst < 1e-4


def test_gradient_check_train_mode_batch_norm():
    # Batch statistics participate in the objective; backprop must match.
    rng = np.random.default_rng(3)
    config = MlpConfig(hidden_widths=(6, 4), activation="tanh", dropout_rate=0.0, seed=5)
    model = init_mlp(config, 5)
    X = rng.normal(size=(10, 5))
    y = rng.normal(size=10)
    err = gradient_check(model, X, y, epsilon=1e-5, max_checked=300, seed=0, mode="train")
    assert err < 1e-4


def test_gradient_check_piecewise_linear_net_is_exact():
    # relu + frozen batch norm make the loss piecewise quadratic in each
    # parameter, so central differences are exact up to rounding. The wide
    # epsilon stays inside one quadratic piece and suppresses the
    # subtraction noise that a tiny step would amplify.
    rng = np.random.default_rng(17)
    config = MlpConfig(hidden_widths=(6,), activation="relu", dropout_rate=0.0, seed=2)
    model = init_mlp(config, 4)
    X = rng.normal(size=(8, 4))
    y = rng.normal(size=8)
    err = gradient_check(model, X, y, epsilon=1e-3, max_checked=100, seed=1)
    assert err < 1e-8


def test_zero_input_bias_gradient_equals_two_mean_residual():
    config = MlpConfig(hidden_widths=(4,), activation="relu", dropout_rate=0.0, seed=9)
    model = init_mlp(config, 3)
    X = np.zeros((5, 3))
    y = np.array([1.0, 2.0, 3.0, -1.0, 0.5])
    loss, yhat, grads = loss_and_grads(model, X, y, mode="eval")
    residual = yhat - y
    head_bias_grad = grads[-1]
    # analytically 2 * mean(residual); summation order costs a few ulp
    assert head_bias_grad[0] == pytest.approx(2 * residual.mean(), abs=1e-12)


# ---------------------------------------------------------------- metrics


def test_metrics_identity():
    y = np.array([1.0, 2.0, 3.0])
    report = compute_metrics(y, y)
    assert report.mae == 0 and report.mse == 0 and report.mape == 0
    assert report.r2 == 1


def test_metrics_hand_computed():
    report = compute_metrics([1.0, 2.0], [2.0, 4.0])
    assert report.mae == pytest.approx(1.5)
    assert report.mse == pytest.approx(2.5)
    # MAPE = 100 * mean(|e| / |y_true|) = 100 * mean(1/1, 2/2)
    assert report.mape == pytest.approx(100.0)
    assert report.r2 == pytest.approx(1 - 5 / 0.5)


def test_metrics_degenerate_errors():
    with pytest.raises(ValidationError):
        compute_metrics([2.0, 2.0], [1.0, 3.0])
    with pytest.raises(ValidationError):
        compute_metrics([0.0, 1.0], [1.0, 2.0])
    lenient = compute_metrics([2.0, 2.0], [1.0, 3.0], allow_degenerate=True)
    assert math.isnan(lenient.r2)


def test_metrics_length_mismatch():
    with pytest.raises(SchemaError):
        compute_metrics([1.0], [1.0, 2.0])


def test_metrics_report_serialization_round_trip():
    report = MetricsReport(mae=1.752, mse=6.900, r2=0.900, mape=10.89)
    again = MetricsReport.from_dict(report.to_dict())
    assert again == report


# ---------------------------------------------------------------- serialization


def test_model_json_round_trip(tmp_path):
    config = small_config(dropout_rate=0.2)
    model = init_mlp(config, 8)
    rng = np.random.default_rng(31)
    X = rng.normal(size=(30, 8))
    y = rng.normal(size=30)
    best, _ = train_mlp(model, X[:24], y[:24], X[24:], y[24:], config)
    path = tmp_path / "model.json"
    best.save(path)
    loaded = MlpModel.load(path)
    probe = rng.normal(size=(10, 8))
    assert np.array_equal(best.predict(probe), loaded.predict(probe))
    assert loaded.config.to_dict() == best.config.to_dict()
    assert loaded.metadata["best_val_mae"] == best.metadata["best_val_mae"]
