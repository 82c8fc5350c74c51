"""Orientation and per-facet inclination analysis.

Inclination is the angle between a facet's outward normal (right-hand
winding) and the build direction, +Z by default: 0 degrees is an upward
horizontal face, 90 a vertical wall, above 90 an overhang. The predictor
was trained on 0..170 degrees, so steeper facets are clamped to 170 and
flagged rather than extrapolated.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ValidationError
from ..schema import ANGLE_MAX
from .io import TriangleMesh

DEGENERATE_REL_AREA = 1e-12  # of the squared bounding-box diagonal


@dataclass(frozen=True)
class Orientation:
    """Extrinsic rotations in degrees about the fixed world axes,
    applied X then Y then Z (combined matrix R = Rz @ Ry @ Rx)."""

    rx: float = 0.0
    ry: float = 0.0
    rz: float = 0.0

    def __post_init__(self):
        for axis in ("rx", "ry", "rz"):
            v = getattr(self, axis)
            if not np.isfinite(v):
                raise ValidationError(f"orientation angle {axis} must be finite, got {v}")

    def matrix(self) -> np.ndarray:
        ax, ay, az = np.radians([self.rx, self.ry, self.rz])
        cx, sx = np.cos(ax), np.sin(ax)
        cy, sy = np.cos(ay), np.sin(ay)
        cz, sz = np.cos(az), np.sin(az)
        rx = np.array([[1, 0, 0], [0, cx, -sx], [0, sx, cx]])
        ry = np.array([[cy, 0, sy], [0, 1, 0], [-sy, 0, cy]])
        rz = np.array([[cz, -sz, 0], [sz, cz, 0], [0, 0, 1]])
        return rz @ ry @ rx

    def to_dict(self) -> dict:
        return {"rx": self.rx, "ry": self.ry, "rz": self.rz}

    @classmethod
    def from_dict(cls, data: dict) -> "Orientation":
        return cls(rx=float(data.get("rx", 0.0)), ry=float(data.get("ry", 0.0)),
                   rz=float(data.get("rz", 0.0)))


def apply_orientation(mesh: TriangleMesh, orientation: Orientation) -> TriangleMesh:
    """Rotate the mesh; the identity orientation returns vertices unchanged
    bit for bit. Stored normals are dropped (analysis recomputes them)."""
    if orientation == Orientation(0.0, 0.0, 0.0):
        return TriangleMesh(vertices=mesh.vertices.copy(), triangles=mesh.triangles.copy())
    R = orientation.matrix()
    return TriangleMesh(vertices=mesh.vertices @ R.T, triangles=mesh.triangles.copy())


def triangle_normals_areas(mesh: TriangleMesh):
    """Unit normals (right-hand winding) and areas per facet.

    Degenerate facets get a zero normal and their true (near-zero) area.
    """
    corners = mesh.corner_array()
    cross = np.cross(corners[:, 1] - corners[:, 0], corners[:, 2] - corners[:, 0])
    norms = np.linalg.norm(cross, axis=1)
    areas = 0.5 * norms
    safe = np.where(norms > 0, norms, 1.0)
    normals = cross / safe[:, None]
    normals[norms == 0] = 0.0
    return normals, areas


@dataclass(frozen=True)
class FacetDescriptor:
    """Per-facet geometry relevant to roughness prediction."""

    facet_id: int
    normal: tuple[float, float, float]
    area: float
    inclination: float  # degrees in [0, 180]
    model_angle: float  # clamped to the training domain [0, 170]
    clamped: bool
    degenerate: bool


def facet_arrays(mesh: TriangleMesh, build_direction=None) -> dict:
    """Vectorized facet descriptors.

    Returns normals, areas, inclination (degrees), model_angle (clamped),
    clamped and degenerate masks. ``build_direction`` defaults to +Z and is
    normalized before use.
    """
    normals, areas = triangle_normals_areas(mesh)
    if build_direction is None:
        b = np.array([0.0, 0.0, 1.0])
    else:
        b = np.asarray(build_direction, dtype=float).ravel()
        norm = np.linalg.norm(b)
        if norm == 0:
            raise ValidationError("build direction must be non-zero")
        b = b / norm
    lo, hi = mesh.bounding_box()
    diag_sq = float(np.sum((hi - lo) ** 2))
    degenerate = areas < DEGENERATE_REL_AREA * diag_sq if diag_sq > 0 else np.ones(len(areas), bool)
    # atan2 of (sine, cosine) instead of arccos(cosine): arccos loses ~1e-6
    # degrees of precision near 0/180 where its derivative blows up.
    cosine = normals @ b
    sine = np.linalg.norm(np.cross(normals, b), axis=1)
    inclination = np.degrees(np.arctan2(sine, cosine))
    inclination[degenerate] = 0.0
    clamped = (inclination > ANGLE_MAX) & ~degenerate
    model_angle = np.minimum(inclination, ANGLE_MAX)
    return {
        "normals": normals,
        "areas": areas,
        "inclination": inclination,
        "model_angle": model_angle,
        "clamped": clamped,
        "degenerate": degenerate,
    }


def facet_descriptors(mesh: TriangleMesh, build_direction=None) -> list[FacetDescriptor]:
    """Per-facet records; degenerate facets are flagged, not dropped."""
    arrays = facet_arrays(mesh, build_direction)
    return [
        FacetDescriptor(
            facet_id=i,
            normal=tuple(float(v) for v in arrays["normals"][i]),
            area=float(arrays["areas"][i]),
            inclination=float(arrays["inclination"][i]),
            model_angle=float(arrays["model_angle"][i]),
            clamped=bool(arrays["clamped"][i]),
            degenerate=bool(arrays["degenerate"][i]),
        )
        for i in range(mesh.triangle_count)
    ]


def unit_cube_mesh() -> TriangleMesh:
    """Axis-aligned unit cube as 12 outward-wound triangles."""
    v = np.array([
        [0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0],
        [0, 0, 1], [1, 0, 1], [1, 1, 1], [0, 1, 1],
    ], dtype=float)
    quads = [
        ([0, 3, 2, 1]),  # bottom, normal -Z
        ([4, 5, 6, 7]),  # top, normal +Z
        ([0, 1, 5, 4]),  # front, -Y
        ([2, 3, 7, 6]),  # back, +Y
        ([1, 2, 6, 5]),  # right, +X
        ([3, 0, 4, 7]),  # left, -X
    ]
    tris = []
    for q in quads:
        tris.append([q[0], q[1], q[2]])
        tris.append([q[0], q[2], q[3]])
    return TriangleMesh(vertices=v, triangles=np.array(tris, dtype=int))
