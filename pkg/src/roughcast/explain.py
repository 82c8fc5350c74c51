"""Exact Shapley attribution via full coalition enumeration.

The value of a coalition S is the interventional expectation over a
background set: absent features are replaced by background rows and the
model prediction is averaged. With 8 features all 256 coalitions are
enumerated, so attributions satisfy efficiency to machine precision:
base value + sum(phi) equals the model prediction of the instance.

Attributions are in output units (micrometers) on the original feature
scale; the model's min-max scaler is folded into the value function.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial

import numpy as np

from .errors import ConfigError, ValidationError
from .neuralnet import MlpModel

MAX_ENUMERABLE_FEATURES = 16


def _value_function(model: MlpModel):
    if model.scaler is not None:
        return lambda rows: model.predict(model.scaler.apply(rows))
    return lambda rows: model.predict(rows)


@dataclass
class ShapExplanation:
    """Additive attribution of one prediction."""

    base_value: float
    phi: dict[str, float]
    instance: np.ndarray
    background_size: int
    prediction: float

    @property
    def phi_vector(self) -> np.ndarray:
        return np.array(list(self.phi.values()))

    def to_dict(self) -> dict:
        return {
            "base_value": self.base_value,
            "phi": self.phi,
            "instance": [float(v) for v in self.instance],
            "background_size": self.background_size,
            "prediction": self.prediction,
        }


def _coalition_values(predict, instance: np.ndarray, background: np.ndarray) -> np.ndarray:
    """v(S) for all 2^n coalitions, one batched model call."""
    n = len(instance)
    n_masks = 1 << n
    B = len(background)
    rows = np.tile(background, (n_masks, 1))
    for i in range(n):
        member = (np.arange(n_masks) >> i) & 1
        rows[np.repeat(member.astype(bool), B), i] = instance[i]
    preds = predict(rows).reshape(n_masks, B)
    return preds.mean(axis=1)


def shap_exact(model: MlpModel, instance, background) -> ShapExplanation:
    """Exact Shapley attributions for a single raw-unit feature row.

    Refuses more than MAX_ENUMERABLE_FEATURES features (enumeration bound)
    and an empty background.
    """
    instance = np.asarray(instance, dtype=float).ravel()
    background = np.atleast_2d(np.asarray(background, dtype=float))
    n = len(instance)
    if n > MAX_ENUMERABLE_FEATURES:
        raise ConfigError(
            f"{n} features exceed the exact-enumeration bound of {MAX_ENUMERABLE_FEATURES}"
        )
    if len(background) == 0:
        raise ValidationError("background set must be non-empty")
    if background.shape[1] != n:
        raise ValidationError(
            f"background width {background.shape[1]} != instance width {n}"
        )

    predict = _value_function(model)
    values = _coalition_values(predict, instance, background)

    # Shapley kernel weights by coalition size, |S|! (n-|S|-1)! / n!
    weights = np.array([factorial(s) * factorial(n - s - 1) / factorial(n) for s in range(n)])
    popcount = np.array([bin(m).count("1") for m in range(1 << n)])

    phi = np.zeros(n)
    masks = np.arange(1 << n)
    for i in range(n):
        without = masks[(masks >> i) & 1 == 0]
        gains = values[without | (1 << i)] - values[without]
        phi[i] = float(np.sum(weights[popcount[without]] * gains))

    names = model.feature_order if len(model.feature_order) == n else tuple(
        f"f{i}" for i in range(n)
    )
    return ShapExplanation(
        base_value=float(values[0]),
        phi={name: float(p) for name, p in zip(names, phi)},
        instance=instance,
        background_size=len(background),
        prediction=float(values[-1]),
    )


@dataclass
class GlobalImportance:
    """Mean absolute attribution per feature over an evaluation set."""

    mean_abs: dict[str, float]
    ranking: list[str]
    phi_matrix: np.ndarray  # (n_samples, n_features)
    value_matrix: np.ndarray  # raw feature values, same shape
    base_values: np.ndarray

    def to_dict(self) -> dict:
        return {
            "mean_abs": self.mean_abs,
            "ranking": self.ranking,
            "phi_matrix": self.phi_matrix.tolist(),
            "value_matrix": self.value_matrix.tolist(),
            "base_values": self.base_values.tolist(),
        }


def global_importance(model: MlpModel, evaluation_rows, background) -> GlobalImportance:
    """Aggregate |phi| over an evaluation set; exports beeswarm plot data."""
    evaluation_rows = np.atleast_2d(np.asarray(evaluation_rows, dtype=float))
    if len(evaluation_rows) == 0:
        raise ValidationError("evaluation set must be non-empty")
    explanations = [shap_exact(model, row, background) for row in evaluation_rows]
    phi_matrix = np.vstack([e.phi_vector for e in explanations])
    names = list(explanations[0].phi.keys())
    mean_abs = {name: float(v) for name, v in zip(names, np.mean(np.abs(phi_matrix), axis=0))}
    ranking = sorted(names, key=lambda nm: -mean_abs[nm])
    return GlobalImportance(
        mean_abs=mean_abs,
        ranking=ranking,
        phi_matrix=phi_matrix,
        value_matrix=evaluation_rows.copy(),
        base_values=np.array([e.base_value for e in explanations]),
    )
