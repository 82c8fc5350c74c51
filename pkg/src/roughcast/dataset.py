"""Measurement-table ingestion, descriptive statistics, splits, and scaling.

The measurement CSV schema (header mandatory, UTF-8, dot decimal):

    object_id,layer_height_mm,extrusion_temp_c,outer_wall_speed_mm_s,
    infill_density_pct,wall_thickness_mm,bed_temp_c,fan_speed_pct,
    surface_angle_deg,ra_um

Min-max scaling is always fitted on a training subset only; transformed
values outside the training range extrapolate linearly outside [0, 1]
without clipping.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    ConfigError,
    InsufficientDataError,
    ParseError,
    SchemaError,
    ValidationError,
)
from .schema import (
    ANGLE_MAX,
    ANGLE_MIN,
    CSV_COLUMNS,
    FEATURE_NAMES,
    N_FEATURES,
    ProcessParameters,
)


@dataclass(frozen=True)
class MeasurementRecord:
    """One profilometer observation: 7 process parameters + angle + Ra."""

    object_id: str
    params: ProcessParameters
    surface_angle: float
    ra: float

    def __post_init__(self):
        if not (ANGLE_MIN <= self.surface_angle <= ANGLE_MAX):
            raise ValidationError(
                f"surface_angle {self.surface_angle} outside [{ANGLE_MIN}, {ANGLE_MAX}]"
            )
        if not (math.isfinite(self.ra) and self.ra > 0):
            raise ValidationError(f"ra must be finite and > 0, got {self.ra}")

    def feature_vector(self) -> np.ndarray:
        return np.array(self.params.as_tuple() + (self.surface_angle,), dtype=float)


class Dataset:
    """Immutable measurement table in canonical feature order.

    ``X`` is an (n, 8) float array, ``y`` the Ra column in micrometers,
    ``object_ids`` the specimen identifiers.
    """

    def __init__(self, object_ids, X, y, source: str = ""):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        if X.ndim != 2 or X.shape[1] != N_FEATURES:
            raise SchemaError(f"feature matrix must be (n, {N_FEATURES}), got {X.shape}")
        if len(y) != len(X) or len(object_ids) != len(X):
            raise SchemaError("object_ids, X and y must have equal length")
        if len(X) == 0:
            raise ValidationError("empty dataset: at least one record required")
        if not np.all(np.isfinite(X)) or not np.all(np.isfinite(y)):
            raise ValidationError("dataset contains non-finite values")
        self.object_ids = list(object_ids)
        self.X = X
        self.X.setflags(write=False)
        self.y = y
        self.y.setflags(write=False)
        self.source = source

    def __len__(self) -> int:
        return len(self.y)

    def record(self, i: int) -> MeasurementRecord:
        row = self.X[i]
        return MeasurementRecord(
            object_id=self.object_ids[i],
            params=ProcessParameters(*row[:7]),
            surface_angle=float(row[7]),
            ra=float(self.y[i]),
        )

    def subset(self, indices) -> "Dataset":
        idx = np.asarray(sorted(indices), dtype=int)
        return Dataset(
            [self.object_ids[i] for i in idx],
            self.X[idx],
            self.y[idx],
            source=f"{self.source}[subset n={len(idx)}]",
        )


def load_dataset(path) -> Dataset:
    """Load and validate a measurement CSV.

    Raises SchemaError for missing/misnamed columns, ParseError (with line
    number) for non-numeric cells, ValidationError for out-of-domain values
    or an empty table.
    """
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: file is empty, expected header {','.join(CSV_COLUMNS)}")
        header = [h.strip() for h in header]
        missing = [c for c in CSV_COLUMNS if c not in header]
        if missing:
            raise SchemaError(f"{path}: missing columns: {', '.join(missing)}")
        col_index = {c: header.index(c) for c in CSV_COLUMNS}

        object_ids: list[str] = []
        X_rows: list[list[float]] = []
        y_vals: list[float] = []
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) < len(header):
                raise ParseError(f"{path}: expected {len(header)} cells, got {len(row)}", line=line_no)
            object_ids.append(row[col_index["object_id"]].strip())
            values = []
            for col in CSV_COLUMNS[1:]:
                cell = row[col_index[col]].strip()
                try:
                    values.append(float(cell))
                except ValueError:
                    raise ParseError(f"{path}: column {col!r}: non-numeric value {cell!r}", line=line_no)
            angle = values[7]
            if not (ANGLE_MIN <= angle <= ANGLE_MAX):
                raise ValidationError(
                    f"{path}: line {line_no}: surface_angle_deg {angle} outside [{ANGLE_MIN}, {ANGLE_MAX}]"
                )
            ra = values[8]
            if not (math.isfinite(ra) and ra > 0):
                raise ValidationError(f"{path}: line {line_no}: ra_um must be finite and > 0, got {ra}")
            X_rows.append(values[:8])
            y_vals.append(ra)

    if not X_rows:
        raise ValidationError(f"{path}: empty dataset: header present but no data rows")
    return Dataset(object_ids, np.array(X_rows), np.array(y_vals), source=str(path))


def save_dataset(dataset: Dataset, path, weights=None, provenance=None) -> None:
    """Write a Dataset back to the measurement CSV schema.

    Optional ``weights``/``provenance`` arrays append the synthetic-record
    columns used by augmentation exports.
    """
    path = Path(path)
    header = list(CSV_COLUMNS)
    if weights is not None:
        header += ["weight", "provenance"]
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        for i in range(len(dataset)):
            row = [dataset.object_ids[i]]
            row += [repr(float(v)) for v in dataset.X[i]]
            row.append(repr(float(dataset.y[i])))
            if weights is not None:
                row.append(repr(float(weights[i])))
                row.append(provenance[i] if provenance is not None else "real")
            writer.writerow(row)


@dataclass(frozen=True)
class DescriptiveStats:
    """Summary statistics in target units.

    Quartiles use linear interpolation between order statistics, so the
    median of an even-length sample is the midpoint of the two central
    values. ``std`` is the sample standard deviation (n-1 denominator) and
    ``skewness`` the adjusted Fisher-Pearson standardized third moment.
    """

    count: int
    mean: float
    std: float
    min: float
    q1: float
    median: float
    q3: float
    max: float
    skewness: float

    def to_dict(self) -> dict:
        return {
            "count": self.count,
            "mean": self.mean,
            "std": self.std,
            "min": self.min,
            "q1": self.q1,
            "median": self.median,
            "q3": self.q3,
            "max": self.max,
            "skewness": self.skewness,
        }


def descriptive_stats(values) -> DescriptiveStats:
    """Compute DescriptiveStats for a list of reals.

    Needs >= 2 values for the standard deviation and >= 3 for skewness;
    a constant vector has no defined skewness and is rejected.
    """
    v = np.asarray(values, dtype=float)
    n = len(v)
    if n < 2:
        raise InsufficientDataError(f"need >= 2 values for std, got {n}")
    if n < 3:
        raise InsufficientDataError(f"need >= 3 values for skewness, got {n}")
    std = float(np.std(v, ddof=1))
    if std == 0.0:
        raise InsufficientDataError("skewness undefined for a constant vector")
    m2 = float(np.mean((v - v.mean()) ** 2))
    m3 = float(np.mean((v - v.mean()) ** 3))
    g1 = m3 / m2**1.5
    skew = g1 * math.sqrt(n * (n - 1)) / (n - 2)
    q1, med, q3 = np.percentile(v, [25, 50, 75])
    return DescriptiveStats(
        count=n,
        mean=float(v.mean()),
        std=std,
        min=float(v.min()),
        q1=float(q1),
        median=float(med),
        q3=float(q3),
        max=float(v.max()),
        skewness=float(skew),
    )


@dataclass
class SplitIndices:
    """Disjoint train/val/test index sets covering 0..n-1."""

    train: list[int]
    val: list[int]
    test: list[int]
    seed: int

    def __post_init__(self):
        self.validate()

    @property
    def n(self) -> int:
        return len(self.train) + len(self.val) + len(self.test)

    def validate(self) -> None:
        train, val, test = set(self.train), set(self.val), set(self.test)
        if train & val or train & test or val & test:
            raise ValidationError("split index sets overlap")
        union = train | val | test
        if union != set(range(self.n)):
            raise ValidationError("split index sets do not cover 0..n-1 exactly")

    def to_dict(self) -> dict:
        return {
            "train": sorted(int(i) for i in self.train),
            "val": sorted(int(i) for i in self.val),
            "test": sorted(int(i) for i in self.test),
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SplitIndices":
        return cls(
            train=list(data["train"]),
            val=list(data.get("val", [])),
            test=list(data["test"]),
            seed=int(data.get("seed", 0)),
        )


def split_holdout(dataset: Dataset, fractions, seed: int, group_by_object: bool = False) -> SplitIndices:
    """Deterministic seeded split into (train, val, test).

    Fractions must sum to 1 (val may be 0). Test and val sizes are
    floor-rounded; the remainder goes to train. With ``group_by_object``
    all records of one specimen land in the same partition (the default is
    a record-level split).
    """
    f_train, f_val, f_test = (float(f) for f in fractions)
    if f_train <= 0 or f_val < 0 or f_test < 0:
        raise ConfigError(f"fractions must be positive (val may be 0): {fractions}")
    if abs(f_train + f_val + f_test - 1.0) > 1e-9:
        raise ConfigError(f"fractions must sum to 1, got {f_train + f_val + f_test}")

    n = len(dataset)
    rng = np.random.default_rng(seed)
    if group_by_object:
        groups = sorted(set(dataset.object_ids))
        order = rng.permutation(len(groups))
        shuffled_groups = [groups[i] for i in order]
        by_group: dict[str, list[int]] = {g: [] for g in groups}
        for i, oid in enumerate(dataset.object_ids):
            by_group[oid].append(i)
        # Fill test, then val, greedily by whole groups until the floor quota
        # is reached; everything else is train.
        n_test = int(n * f_test)
        n_val = int(n * f_val)
        test: list[int] = []
        val: list[int] = []
        train: list[int] = []
        for g in shuffled_groups:
            members = by_group[g]
            if len(test) < n_test:
                test.extend(members)
            elif len(val) < n_val:
                val.extend(members)
            else:
                train.extend(members)
        return SplitIndices(train=sorted(train), val=sorted(val), test=sorted(test), seed=seed)

    perm = rng.permutation(n)
    n_test = int(n * f_test)
    n_val = int(n * f_val)
    test = sorted(int(i) for i in perm[:n_test])
    val = sorted(int(i) for i in perm[n_test : n_test + n_val])
    train = sorted(int(i) for i in perm[n_test + n_val :])
    return SplitIndices(train=train, val=val, test=test, seed=seed)


def drop_duplicate_parameter_rows(dataset: Dataset) -> Dataset:
    """Keep one representative record per duplicated feature vector.

    Replicated center runs repeat the exact same settings; keeping every
    copy would duplicate feature vectors in supervised fitting. The first
    occurrence (file order) wins.
    """
    seen: set[tuple[float, ...]] = set()
    keep: list[int] = []
    for i in range(len(dataset)):
        key = tuple(dataset.X[i])
        if key in seen:
            continue
        seen.add(key)
        keep.append(i)
    if len(keep) == len(dataset):
        return dataset
    return dataset.subset(keep)


@dataclass
class ScalerParams:
    """Per-feature min-max parameters fitted on a training subset.

    ``constant_mask`` marks features whose training min equals max; those
    map to 0.5 (flagged, not fatal). Optional target min/max support Ra
    normalization for the generator.
    """

    feature_min: np.ndarray
    feature_max: np.ndarray
    feature_names: tuple[str, ...] = FEATURE_NAMES
    target_min: float | None = None
    target_max: float | None = None
    constant_mask: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        self.feature_min = np.asarray(self.feature_min, dtype=float)
        self.feature_max = np.asarray(self.feature_max, dtype=float)
        if self.feature_min.shape != self.feature_max.shape:
            raise SchemaError("feature_min and feature_max must have the same shape")
        if np.any(self.feature_min > self.feature_max):
            raise ValidationError("scaler min > max")
        if self.constant_mask is None:
            self.constant_mask = self.feature_min == self.feature_max

    @property
    def width(self) -> int:
        return len(self.feature_min)

    def has_constant_features(self) -> bool:
        return bool(np.any(self.constant_mask))

    def apply(self, rows) -> np.ndarray:
        """Map rows into training-normalized space (no clipping)."""
        rows = np.atleast_2d(np.asarray(rows, dtype=float))
        if rows.shape[1] != self.width:
            raise SchemaError(f"row width {rows.shape[1]} != scaler width {self.width}")
        span = np.where(self.constant_mask, 1.0, self.feature_max - self.feature_min)
        scaled = (rows - self.feature_min) / span
        if self.has_constant_features():
            scaled[:, self.constant_mask] = 0.5
        return scaled

    def invert(self, rows) -> np.ndarray:
        rows = np.atleast_2d(np.asarray(rows, dtype=float))
        if rows.shape[1] != self.width:
            raise SchemaError(f"row width {rows.shape[1]} != scaler width {self.width}")
        span = np.where(self.constant_mask, 1.0, self.feature_max - self.feature_min)
        out = rows * span + self.feature_min
        if self.has_constant_features():
            out[:, self.constant_mask] = self.feature_min[self.constant_mask]
        return out

    def apply_target(self, values) -> np.ndarray:
        if self.target_min is None or self.target_max is None:
            raise ConfigError("scaler was fitted without target min/max")
        span = self.target_max - self.target_min
        if span == 0:
            return np.full_like(np.asarray(values, dtype=float), 0.5)
        return (np.asarray(values, dtype=float) - self.target_min) / span

    def invert_target(self, values) -> np.ndarray:
        if self.target_min is None or self.target_max is None:
            raise ConfigError("scaler was fitted without target min/max")
        span = self.target_max - self.target_min
        return np.asarray(values, dtype=float) * span + self.target_min

    def to_dict(self) -> dict:
        return {
            "feature_names": list(self.feature_names),
            "feature_min": [float(v) for v in self.feature_min],
            "feature_max": [float(v) for v in self.feature_max],
            "target_min": self.target_min,
            "target_max": self.target_max,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ScalerParams":
        return cls(
            feature_min=np.array(data["feature_min"], dtype=float),
            feature_max=np.array(data["feature_max"], dtype=float),
            feature_names=tuple(data.get("feature_names", FEATURE_NAMES)),
            target_min=data.get("target_min"),
            target_max=data.get("target_max"),
        )


def fit_scaler(X_train, y_train=None, feature_names: tuple[str, ...] = FEATURE_NAMES) -> ScalerParams:
    """Fit min-max parameters on a training subset only.

    Passing ``y_train`` also records target min/max for Ra normalization.
    """
    X_train = np.atleast_2d(np.asarray(X_train, dtype=float))
    if len(X_train) == 0:
        raise InsufficientDataError("cannot fit a scaler on an empty subset")
    target_min = target_max = None
    if y_train is not None:
        y_train = np.asarray(y_train, dtype=float)
        target_min = float(y_train.min())
        target_max = float(y_train.max())
    return ScalerParams(
        feature_min=X_train.min(axis=0),
        feature_max=X_train.max(axis=0),
        feature_names=feature_names,
        target_min=target_min,
        target_max=target_max,
    )
