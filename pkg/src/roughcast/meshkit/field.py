"""Roughness fields: batch prediction over facets plus colorization.

Colors follow a five-stop linear ramp (blue, cyan, green, yellow, red)
over [lo, hi]; auto range spans the field's own min/max. Degenerate facets
are excluded from prediction and rendered neutral gray.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field as dataclass_field
from pathlib import Path

import numpy as np

from ..errors import ContractError, ValidationError
from ..neuralnet import MlpModel
from ..schema import FEATURE_NAMES, ProcessParameters
from .geometry import Orientation, apply_orientation, facet_arrays
from .io import TriangleMesh

COLOR_STOPS = np.array([
    [0, 0, 255],      # blue
    [0, 255, 255],    # cyan
    [0, 255, 0],      # green
    [255, 255, 0],    # yellow
    [255, 0, 0],      # red
], dtype=float)

DEGENERATE_RGB = (128, 128, 128)
HISTOGRAM_BINS = 16


def color_ramp(t) -> np.ndarray:
    """Map t in [0, 1] onto the five-stop ramp; clips outside values."""
    t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
    pos = t * (len(COLOR_STOPS) - 1)
    i = np.minimum(pos.astype(int), len(COLOR_STOPS) - 2)
    frac = (pos - i)[:, None]
    rgb = COLOR_STOPS[i] * (1 - frac) + COLOR_STOPS[i + 1] * frac
    return np.rint(rgb).astype(int)


@dataclass
class RoughnessField:
    """Per-facet predicted Ra with colors and summary statistics."""

    facet_ids: np.ndarray
    inclination: np.ndarray  # degrees, [0, 180]
    model_angle: np.ndarray  # degrees fed to the predictor, [0, 170]
    ra: np.ndarray  # micrometers; NaN for degenerate facets
    rgb: np.ndarray  # (m, 3) ints
    clamped: np.ndarray
    degenerate: np.ndarray
    summary: dict
    params: ProcessParameters
    orientation: Orientation
    color_range: dict = dataclass_field(default_factory=dict)

    def to_dict(self) -> dict:
        facets = []
        for i in range(len(self.facet_ids)):
            deg = bool(self.degenerate[i])
            facets.append({
                "id": int(self.facet_ids[i]),
                "angle_deg": float(self.inclination[i]),
                "ra_um": None if deg else float(self.ra[i]),
                "rgb": [int(c) for c in self.rgb[i]],
                "clamped": bool(self.clamped[i]),
                "degenerate": deg,
            })
        return {
            "facets": facets,
            "summary": self.summary,
            "params": self.params.to_dict(),
            "orientation": self.orientation.to_dict(),
            "color_range": self.color_range,
        }


def predict_field(model: MlpModel, mesh: TriangleMesh, orientation: Orientation,
                  params: ProcessParameters, color_range="auto") -> RoughnessField:
    """Rotate, compute inclinations, batch-predict Ra, colorize.

    The model must embed a scaler over the canonical 8-feature order;
    feature vectors are (7 parameters, clamped inclination) scaled by it.
    ``color_range`` is "auto" or a (lo, hi) pair.
    """
    if model.scaler is None:
        raise ContractError("model has no embedded scaler; mesh prediction needs one")
    if tuple(model.feature_order) != FEATURE_NAMES:
        raise ContractError(
            f"model feature order {model.feature_order} != canonical {FEATURE_NAMES}"
        )
    if not isinstance(params, ProcessParameters):
        params = ProcessParameters.from_dict(dict(params))

    rotated = apply_orientation(mesh, orientation)
    arrays = facet_arrays(rotated)
    m = mesh.triangle_count
    active = ~arrays["degenerate"]

    ra = np.full(m, np.nan)
    if np.any(active):
        angles = arrays["model_angle"][active]
        features = np.empty((len(angles), len(FEATURE_NAMES)))
        features[:, :7] = np.array(params.as_tuple())
        features[:, 7] = angles
        ra[active] = model.predict(model.scaler.apply(features))

    if color_range == "auto":
        if np.any(active):
            lo, hi = float(np.nanmin(ra)), float(np.nanmax(ra))
        else:
            lo, hi = 0.0, 1.0
        range_info = {"mode": "auto", "lo": lo, "hi": hi}
    else:
        lo, hi = (float(v) for v in color_range)
        if not (np.isfinite(lo) and np.isfinite(hi)) or hi < lo:
            raise ValidationError(f"fixed color range must be finite with lo <= hi: ({lo}, {hi})")
        range_info = {"mode": "fixed", "lo": lo, "hi": hi}

    rgb = np.tile(np.array(DEGENERATE_RGB), (m, 1))
    if np.any(active):
        if hi > lo:
            t = (ra[active] - lo) / (hi - lo)
        else:
            t = np.full(int(active.sum()), 0.5)  # uniform field renders one color
        rgb[active] = color_ramp(t)

    active_ra = ra[active]
    areas = arrays["areas"][active]
    if len(active_ra):
        histogram = np.histogram(active_ra, bins=HISTOGRAM_BINS, range=(lo, hi) if hi > lo else None)
        summary = {
            "count": int(m),
            "predicted_count": int(active.sum()),
            "degenerate_count": int((~active).sum()),
            "clamped_count": int(arrays["clamped"].sum()),
            "min_ra": float(active_ra.min()),
            "max_ra": float(active_ra.max()),
            "mean_ra": float(active_ra.mean()),
            "area_weighted_mean_ra": float(np.sum(active_ra * areas) / np.sum(areas)),
            "histogram": {
                "counts": histogram[0].tolist(),
                "bin_edges": histogram[1].tolist(),
            },
        }
    else:
        summary = {
            "count": int(m),
            "predicted_count": 0,
            "degenerate_count": int(m),
            "clamped_count": 0,
            "min_ra": None,
            "max_ra": None,
            "mean_ra": None,
            "area_weighted_mean_ra": None,
            "histogram": {"counts": [], "bin_edges": []},
        }

    return RoughnessField(
        facet_ids=np.arange(m),
        inclination=arrays["inclination"],
        model_angle=arrays["model_angle"],
        ra=ra,
        rgb=rgb,
        clamped=arrays["clamped"],
        degenerate=arrays["degenerate"],
        summary=summary,
        params=params,
        orientation=orientation,
        color_range=range_info,
    )


def write_field_json(field: RoughnessField, path) -> None:
    Path(path).write_text(json.dumps(field.to_dict()), encoding="utf-8")


def write_field_sidecar(field: RoughnessField, path) -> None:
    """Binary sidecar for large meshes: uint32 facet count, then one
    little-endian float32 Ra per facet (NaN for degenerate facets)."""
    with open(path, "wb") as f:
        f.write(struct.pack("<I", len(field.facet_ids)))
        f.write(field.ra.astype("<f4").tobytes())


def read_field_sidecar(path) -> np.ndarray:
    data = Path(path).read_bytes()
    (count,) = struct.unpack_from("<I", data, 0)
    return np.frombuffer(data, dtype="<f4", count=count, offset=4).astype(float)
