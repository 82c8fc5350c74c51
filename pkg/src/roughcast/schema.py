"""Canonical feature schema shared by every component.

The predictor consumes exactly eight features in a fixed order: the seven
printing process parameters followed by the surface inclination angle.
Everything that crosses a module boundary (CSV files, scalers, model files,
the HTTP API) uses this order.
"""

from __future__ import annotations

from dataclasses import dataclass

# Canonical feature order. Index 0..6 are process parameters, index 7 is the
# surface inclination angle in degrees.
FEATURE_NAMES = (
    "layer_height",
    "extrusion_temp",
    "outer_wall_speed",
    "infill_density",
    "wall_thickness",
    "bed_temp",
    "fan_speed",
    "surface_angle",
)

PARAM_NAMES = FEATURE_NAMES[:7]
ANGLE_NAME = FEATURE_NAMES[7]
N_FEATURES = len(FEATURE_NAMES)

# Measurement CSV columns (units spelled out to prevent silent unit bugs).
CSV_COLUMNS = (
    "object_id",
    "layer_height_mm",
    "extrusion_temp_c",
    "outer_wall_speed_mm_s",
    "infill_density_pct",
    "wall_thickness_mm",
    "bed_temp_c",
    "fan_speed_pct",
    "surface_angle_deg",
    "ra_um",
)

FEATURE_CSV_COLUMNS = CSV_COLUMNS[1:9]
TARGET_CSV_COLUMN = CSV_COLUMNS[9]

# Inclination domain. Measurements cover 0..170 degrees in 10-degree steps;
# anything steeper is clamped to ANGLE_MAX before prediction.
ANGLE_MIN = 0.0
ANGLE_MAX = 170.0

FEATURE_UNITS = {
    "layer_height": "mm",
    "extrusion_temp": "°C",
    "outer_wall_speed": "mm/s",
    "infill_density": "%",
    "wall_thickness": "mm",
    "bed_temp": "°C",
    "fan_speed": "%",
    "surface_angle": "°",
}

# Display labels used by reports and the UI.
FEATURE_LABELS = {
    "layer_height": "Layer Height",
    "extrusion_temp": "Extrusion Temperature",
    "outer_wall_speed": "Outer Wall Speed",
    "infill_density": "Infill Density",
    "wall_thickness": "Wall Thickness",
    "bed_temp": "Bed Temperature",
    "fan_speed": "Fan Speed",
    "surface_angle": "Surface Angle",
}

# Three discrete levels per process parameter used by the reference
# experiment campaign. These bound the "within design range" check and the
# UI sliders.
STUDY_LEVELS = {
    "layer_height": (0.12, 0.20, 0.28),
    "extrusion_temp": (190.0, 200.0, 210.0),
    "outer_wall_speed": (150.0, 200.0, 250.0),
    "infill_density": (5.0, 15.0, 25.0),
    "wall_thickness": (0.36, 0.42, 0.48),
    "bed_temp": (55.0, 60.0, 65.0),
    "fan_speed": (60.0, 80.0, 100.0),
}


@dataclass(frozen=True)
class ProcessParameters:
    """One setting of the seven printing parameters.

    Values are in physical units (mm, degC, mm/s, %). Out-of-design-range
    values are allowed for prediction but flagged by ``in_design_range``.
    """

    layer_height: float
    extrusion_temp: float
    outer_wall_speed: float
    infill_density: float
    wall_thickness: float
    bed_temp: float
    fan_speed: float

    def __post_init__(self):
        from .errors import ValidationError

        for name in PARAM_NAMES:
            value = getattr(self, name)
            if not _is_finite_positive(value):
                raise ValidationError(
                    f"process parameter {name!r} must be finite and > 0, got {value!r}"
                )

    def as_tuple(self) -> tuple[float, ...]:
        return tuple(float(getattr(self, name)) for name in PARAM_NAMES)

    def in_design_range(self) -> bool:
        """True when every parameter lies inside the study's level span."""
        for name in PARAM_NAMES:
            lo, _, hi = STUDY_LEVELS[name]
            if not (lo <= getattr(self, name) <= hi):
                return False
        return True

    @classmethod
    def from_dict(cls, data: dict) -> "ProcessParameters":
        from .errors import ValidationError

        missing = [name for name in PARAM_NAMES if name not in data]
        if missing:
            raise ValidationError(f"missing process parameters: {', '.join(missing)}")
        return cls(**{name: float(data[name]) for name in PARAM_NAMES})

    def to_dict(self) -> dict:
        return {name: float(getattr(self, name)) for name in PARAM_NAMES}


def _is_finite_positive(value) -> bool:
    try:
        v = float(value)
    except (TypeError, ValueError):
        return False
    return v > 0 and v == v and v not in (float("inf"), float("-inf"))
