from types import SimpleNamespace

import numpy as np
import pytest

from roughcast.errors import ConfigError, ValidationError
from roughcast.explain import global_importance, shap_exact
from roughcast.neuralnet import MlpConfig, init_mlp
from roughcast.schema import FEATURE_NAMES

from conftest import hand_linear_model


def test_linear_model_closed_form():
    weights = np.array([3.0, -2.0, 0.5, 1.0, 0.0, -0.75, 2.0, 4.0])
    model = hand_linear_model(weights, bias=5.0)
    rng = np.random.default_rng(0)
    background = rng.uniform(-2, 2, size=(40, 8))
    instance = rng.uniform(-2, 2, size=8)

    explanation = shap_exact(model, instance, background)
    expected = weights * (instance - background.mean(axis=0))
    assert np.allclose(explanation.phi_vector, expected, atol=1e-8)
    assert explanation.base_value == pytest.approx(
        float(weights @ background.mean(axis=0) + 5.0), abs=1e-8
    )


def test_instance_equal_to_single_background_row():
    model = hand_linear_model(np.arange(1.0, 9.0), bias=2.0)
    row = np.full(8, 0.3)
    explanation = shap_exact(model, row, row.reshape(1, -1))
    assert np.allclose(explanation.phi_vector, 0.0, atol=1e-12)


def test_constant_model_all_zero_phi():
    config = MlpConfig(hidden_widths=(4,), activation="relu", dropout_rate=0.0, seed=1)
    model = init_mlp(config, 8)
    model.layers[-1].W[...] = 0.0
    model.layers[-1].b[...] = [7.25]
    rng = np.random.default_rng(1)
    explanation = shap_exact(model, rng.normal(size=8), rng.normal(size=(10, 8)))
    assert np.all(explanation.phi_vector == 0.0)
    assert explanation.base_value == pytest.approx(7.25)


def test_efficiency_on_trained_model(trained_model, oracle_ds, split70):
    test_idx = np.asarray(sorted(split70.test))[:10]
    bg = oracle_ds.X[np.asarray(sorted(split70.train))[:50]]
    for i in test_idx:
        x = oracle_ds.X[i]
        explanation = shap_exact(trained_model, x, bg)
        prediction = trained_model.predict(trained_model.scaler.apply(x.reshape(1, -1)))[0]
        residual = abs(explanation.base_value + explanation.phi_vector.sum() - prediction)
        assert residual < 1e-6
        assert explanation.prediction == pytest.approx(prediction, abs=1e-9)


def test_symmetry_identical_features():
    weights = np.array([2.0, 2.0, 1.0, 0.0, 0.5, -1.0, 3.0, 0.25])
    model = hand_linear_model(weights, bias=0.0)
    rng = np.random.default_rng(2)
    background = rng.uniform(-1, 1, size=(20, 8))
    background[:, 1] = background[:, 0]  # columns 0 and 1 identical
    instance = rng.uniform(-1, 1, size=8)
    instance[1] = instance[0]
    explanation = shap_exact(model, instance, background)
    phi = explanation.phi_vector
    assert abs(phi[0] - phi[1]) < 1e-9


def test_dummy_feature_exact_zero(trained_model, oracle_ds, split70):
    model = trained_model.copy()
    model.layers[0].W[3, :] = 0.0  # infill column never reaches the network
    bg = oracle_ds.X[np.asarray(sorted(split70.train))[:30]]
    x = oracle_ds.X[int(split70.test[0])]
    explanation = shap_exact(model, x, bg)
    assert explanation.phi_vector[3] == 0.0


def test_linearity_of_explanations():
    m1 = hand_linear_model(np.array([1.0, 0, 0, 0, 2.0, 0, 0, -1.0]), bias=1.0)
    m2 = hand_linear_model(np.array([0.5, -1.0, 0, 0, 0, 0, 1.0, 0.0]), bias=-2.0)
    combined = SimpleNamespace(
        scaler=None,
        feature_order=FEATURE_NAMES,
        predict=lambda rows: m1.predict(rows) + m2.predict(rows),
    )
    rng = np.random.default_rng(3)
    background = rng.uniform(-1, 1, size=(15, 8))
    instance = rng.uniform(-1, 1, size=8)
    phi_sum = (
        shap_exact(m1, instance, background).phi_vector
        + shap_exact(m2, instance, background).phi_vector
    )
    phi_combined = shap_exact(combined, instance, background).phi_vector
    assert np.allclose(phi_combined, phi_sum, atol=1e-9)


def test_refuses_too_many_features():
    model = SimpleNamespace(scaler=None, feature_order=(), predict=lambda rows: rows.sum(axis=1))
    with pytest.raises(ConfigError):
        shap_exact(model, np.zeros(17), np.zeros((2, 17)))


def test_empty_background_rejected():
    model = hand_linear_model(np.ones(8), bias=0.0)
    with pytest.raises(ValidationError):
        shap_exact(model, np.zeros(8), np.zeros((0, 8)))


def test_global_importance_dead_feature(trained_model, oracle_ds, split70):
    model = trained_model.copy()
    model.layers[0].W[5, :] = 0.0
    idx = np.asarray(sorted(split70.test))[:6]
    bg = oracle_ds.X[np.asarray(sorted(split70.train))[:20]]
    importance = global_importance(model, oracle_ds.X[idx], bg)
    assert importance.mean_abs["bed_temp"] == 0.0
    assert importance.ranking[-1] == "bed_temp" or importance.mean_abs[importance.ranking[-1]] == 0.0


def test_global_importance_singleton_equals_abs_phi(trained_model, oracle_ds, split70):
    bg = oracle_ds.X[np.asarray(sorted(split70.train))[:20]]
    x = oracle_ds.X[int(split70.test[1])]
    importance = global_importance(trained_model, x.reshape(1, -1), bg)
    explanation = shap_exact(trained_model, x, bg)
    for name in FEATURE_NAMES:
        assert importance.mean_abs[name] == pytest.approx(abs(explanation.phi[name]), abs=1e-12)


def test_ranking_consistent_with_values(trained_model, oracle_ds, split70):
    idx = np.asarray(sorted(split70.test))[:8]
    bg = oracle_ds.X[np.asarray(sorted(split70.train))[:20]]
    importance = global_importance(trained_model, oracle_ds.X[idx], bg)
    values = [importance.mean_abs[name] for name in importance.ranking]
    assert values == sorted(values, reverse=True)
    assert importance.phi_matrix.shape == (8, 8)
    assert importance.value_matrix.shape == (8, 8)
