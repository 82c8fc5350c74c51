"""Regression metrics: MAE, MSE, R-squared, MAPE."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import SchemaError, ValidationError

MAPE_TARGET_FLOOR = 1e-9


@dataclass(frozen=True)
class MetricsReport:
    """mae/mse in target units (um, um^2); mape in percent.

    Undefined entries (constant targets, near-zero targets) are NaN when
    computed with ``allow_degenerate=True``.
    """

    mae: float
    mse: float
    r2: float
    mape: float

    def to_dict(self) -> dict:
        return {"mae": self.mae, "mse": self.mse, "r2": self.r2, "mape": self.mape}

    @classmethod
    def from_dict(cls, data: dict) -> "MetricsReport":
        return cls(mae=data["mae"], mse=data["mse"], r2=data["r2"], mape=data["mape"])


def compute_metrics(y_true, y_pred, allow_degenerate: bool = False) -> MetricsReport:
    """Compare predictions against measured values.

    R-squared is undefined for constant targets and MAPE for targets at
    zero; by default those raise, with ``allow_degenerate=True`` they come
    back as NaN so bookkeeping paths can proceed.
    """
    y_true = np.asarray(y_true, dtype=float).ravel()
    y_pred = np.asarray(y_pred, dtype=float).ravel()
    if len(y_true) == 0:
        raise SchemaError("metrics need at least one observation")
    if len(y_true) != len(y_pred):
        raise SchemaError(f"length mismatch: {len(y_true)} targets vs {len(y_pred)} predictions")

    e = y_pred - y_true
    mae = float(np.mean(np.abs(e)))
    mse = float(np.mean(e**2))

    ss_tot = float(np.sum((y_true - y_true.mean()) ** 2))
    if ss_tot == 0.0:
        if not allow_degenerate:
            raise ValidationError("R^2 undefined: target variance is zero")
        r2 = float("nan")
    else:
        r2 = 1.0 - float(np.sum(e**2)) / ss_tot

    if np.any(np.abs(y_true) <= MAPE_TARGET_FLOOR):
        if not allow_degenerate:
            raise ValidationError("MAPE undefined: a target is within 1e-9 of zero")
        mape = float("nan")
    else:
        mape = 100.0 * float(np.mean(np.abs(e / y_true)))

    return MetricsReport(mae=mae, mse=mse, r2=r2, mape=mape)
