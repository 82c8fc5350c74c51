"""Shared fixtures: the synthetic benchmark table, canonical splits, and
session-trained models reused by the heavier test modules."""

from __future__ import annotations

import csv
import os
from pathlib import Path

import numpy as np
import pytest

from roughcast.augment import CganConfig, train_cgan
from roughcast.dataset import Dataset, ScalerParams, fit_scaler, split_holdout
from roughcast.neuralnet import Layer, MlpConfig, MlpModel, init_mlp, train_mlp
from roughcast.oracle import make_oracle_dataset
from roughcast.schema import ANGLE_MAX, FEATURE_NAMES, STUDY_LEVELS, PARAM_NAMES

DATA_DIR = Path(__file__).parent / "data"

STUDY_DATASET_ENV = "ROUGHCAST_DATASET"
STUDY_DATASET_DEFAULT = Path(__file__).resolve().parents[1] / "data" / "study_ra.csv"

ACCEPTANCE_LABELS = {
    "test_bbd_reconstruction": "BBD reconstruction (87-run reference multiset, < 1 s)",
    "test_run_count_property": "Run-count property 2k(k-1)+C0, k=3..8, C0=0..5",
    "test_dataset_statistics": "Dataset statistics (measured campaign table)",
    "test_baseline_model_quality_study": "Baseline model quality (measured dataset protocol)",
    "test_baseline_model_quality_synthetic": "Baseline model quality (synthetic fallback, R2 >= 0.90)",
    "test_augmentation_effect_study": "Augmentation effect (measured dataset protocol)",
    "test_augmentation_effect_synthetic": "Augmentation effect (property gate + non-degradation)",
    "test_cgan_marginal_fidelity": "CGAN marginal fidelity (KS < 0.15, clip < 5%)",
    "test_gradient_correctness": "Gradient correctness (backprop vs central differences)",
    "test_leakage_audit": "Leakage audit (poisoned paths must fail)",
    "test_scaler_round_trip": "Scaler round trip + fold-wise train-only equality",
    "test_shapley_exactness": "Shapley exactness (efficiency, closed form, dummy, ranking)",
    "test_geometry": "Geometry (inclinations, co-rotation, area, STL round trip)",
    "test_service_equivalence": "Service equivalence (HTTP == library, concurrency)",
}


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One pass/fail line per acceptance criterion."""
    lines = []
    for outcome in ("passed", "failed", "skipped"):
        for report in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(report, "nodeid", "")
            if "test_acceptance.py" not in nodeid:
                continue
            name = nodeid.split("::")[-1].split("[")[0]
            label = ACCEPTANCE_LABELS.get(name, name)
            if outcome == "skipped":
                reason = ""
                if isinstance(report.longrepr, tuple):
                    reason = f" ({report.longrepr[2]})"
                lines.append(f"SKIP  {label}{reason}")
            else:
                lines.append(f"{'PASS' if outcome == 'passed' else 'FAIL'}  {label}")
    if lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)


def study_dataset_path() -> Path | None:
    """Location of the measured campaign CSV, when present."""
    env = os.environ.get(STUDY_DATASET_ENV)
    if env and Path(env).exists():
        return Path(env)
    if STUDY_DATASET_DEFAULT.exists():
        return STUDY_DATASET_DEFAULT
    return None


def load_reference_run_matrix():
    """Golden 87-run reference table (physical units, canonical order)."""
    rows = []
    with open(DATA_DIR / "reference_run_matrix.csv", newline="") as f:
        reader = csv.reader(f)
        next(reader)
        for row in reader:
            rows.append(tuple(float(v) for v in row[1:]))
    return rows


@pytest.fixture(scope="session")
def oracle_ds() -> Dataset:
    return make_oracle_dataset(seed=7)


@pytest.fixture(scope="session")
def split70(oracle_ds):
    return split_holdout(oracle_ds, (0.70, 0.15, 0.15), seed=42)


@pytest.fixture(scope="session")
def split85(oracle_ds):
    return split_holdout(oracle_ds, (0.85, 0.0, 0.15), seed=42)


def fast_config(**overrides) -> MlpConfig:
    base = dict(
        hidden_widths=(48, 24),
        activation="relu",
        dropout_rate=0.05,
        learning_rate=3e-3,
        batch_size=32,
        max_epochs=120,
        early_stop_patience=15,
        seed=3,
    )
    base.update(overrides)
    return MlpConfig(**base)


@pytest.fixture(scope="session")
def trained_model(oracle_ds, split70) -> MlpModel:
    """Small model trained on the benchmark's train subset, scaler embedded."""
    train_idx = np.asarray(sorted(split70.train))
    val_idx = np.asarray(sorted(split70.val))
    scaler = fit_scaler(oracle_ds.X[train_idx], oracle_ds.y[train_idx])
    config = fast_config()
    model = init_mlp(config, oracle_ds.X.shape[1])
    best, _ = train_mlp(
        model,
        scaler.apply(oracle_ds.X[train_idx]), oracle_ds.y[train_idx],
        scaler.apply(oracle_ds.X[val_idx]), oracle_ds.y[val_idx],
        config,
    )
    best.scaler = scaler
    return best


@pytest.fixture(scope="session")
def cgan_model(oracle_ds, split70):
    return train_cgan(oracle_ds, split70, CganConfig(epochs=300, batch_size=64, seed=11))


def study_range_scaler() -> ScalerParams:
    """Scaler spanning the design's physical ranges plus the angle domain."""
    lows = [STUDY_LEVELS[name][0] for name in PARAM_NAMES] + [0.0]
    highs = [STUDY_LEVELS[name][2] for name in PARAM_NAMES] + [ANGLE_MAX]
    return ScalerParams(
        feature_min=np.array(lows),
        feature_max=np.array(highs),
        feature_names=FEATURE_NAMES,
        target_min=0.0,
        target_max=40.0,
    )


def hand_linear_model(weights, bias: float, scaler: ScalerParams | None = None) -> MlpModel:
    """A model computing exactly sum(w_i * x_i) + bias on its inputs.

    One 8-wide hidden layer is forced into the identity regime: relu kept
    strictly active by a large pre-activation shift, batch norm neutralized
    through its eval-mode affine form. Useful as a closed-form oracle.
    """
    weights = np.asarray(weights, dtype=float)
    d = len(weights)
    shift = 1e3
    bn_scale = np.sqrt(1.0 + 1e-5)  # eval-mode batch norm divides by this
    hidden = Layer(
        W=np.eye(d),
        b=np.full(d, shift),
        gamma=np.ones(d),
        beta=np.zeros(d),
        running_mean=np.zeros(d),
        running_var=np.ones(d),
    )
    head = Layer(
        W=(weights * bn_scale).reshape(d, 1),
        b=np.array([bias - float(np.sum(weights)) * shift]),
    )
    config = MlpConfig(hidden_widths=(d,), activation="relu", dropout_rate=0.0)
    return MlpModel(config=config, input_dim=d, layers=[hidden, head], scaler=scaler)
