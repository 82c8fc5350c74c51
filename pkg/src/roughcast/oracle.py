"""Synthetic benchmark task with a known smooth ground truth.

Mirrors the layout of the physical campaign: one row per (design run,
inclination angle) with Ra produced by a fixed smooth 8-feature function
plus Gaussian measurement noise. Used by dataset-independent tests and as
a runnable demo when the measured dataset is not on disk.
"""

from __future__ import annotations

import numpy as np

from .dataset import Dataset
from .doe import generate_bbd, map_levels, study_factors
from .schema import ANGLE_MAX, STUDY_LEVELS, PARAM_NAMES

NOISE_SIGMA = 1.0  # micrometers


def _normalized_columns(X: np.ndarray) -> list[np.ndarray]:
    cols = []
    for j, name in enumerate(PARAM_NAMES):
        lo, _, hi = STUDY_LEVELS[name]
        cols.append((X[:, j] - lo) / (hi - lo))
    cols.append(X[:, 7] / ANGLE_MAX)
    return cols


def true_surface(X) -> np.ndarray:
    """Noise-free Ra (um) for raw-unit feature rows.

    Smooth and angle-dominated: a strong non-monotone inclination term, a
    layer-height term, a mild interaction, and small linear contributions
    from the remaining parameters.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    h, t, s, d, w, b, f, a = _normalized_columns(X)
    return (
        5.0
        + 11.0 * h
        + 16.0 * np.sin(np.pi * a) ** 2
        + 3.0 * h * np.sin(2 * np.pi * a)
        + 1.2 * t
        - 0.9 * s
        + 0.7 * d
        + 0.6 * w
        + 0.5 * b
        - 0.8 * f
    )


def make_oracle_dataset(seed: int = 0, noise_sigma: float = NOISE_SIGMA,
                        angle_step: float = 10.0, center_replicates: int = 3) -> Dataset:
    """Benchmark table: 2k(k-1)+C0 design runs x the 0..170 angle grid.

    With the default seven factors, three center replicates and a
    10-degree grid this yields 87 x 18 = 1566 records, the same shape as
    the measured campaign.
    """
    design = generate_bbd(study_factors(), center_replicates)
    runs = map_levels(design)
    angles = np.arange(0.0, ANGLE_MAX + 1e-9, angle_step)
    rows = []
    ids = []
    for i, run in enumerate(runs, start=1):
        for angle in angles:
            rows.append(list(run) + [float(angle)])
            ids.append(f"Object-{i}")
    X = np.array(rows)
    rng = np.random.default_rng(seed)
    y = true_surface(X) + noise_sigma * rng.standard_normal(len(X))
    y = np.maximum(y, 0.05)  # Ra must stay positive
    return Dataset(ids, X, y, source=f"oracle(seed={seed}, sigma={noise_sigma})")
