"""Mesh ingestion, inclination analysis, and roughness-field prediction."""

from .field import (
    RoughnessField,
    color_ramp,
    predict_field,
    read_field_sidecar,
    write_field_json,
    write_field_sidecar,
)
from .geometry import (
    FacetDescriptor,
    Orientation,
    apply_orientation,
    facet_arrays,
    facet_descriptors,
    triangle_normals_areas,
    unit_cube_mesh,
)
from .io import (
    TriangleMesh,
    load_mesh,
    load_mesh_bytes,
    parse_obj,
    parse_stl_ascii,
    parse_stl_binary,
    write_stl_binary,
)

__all__ = [
    "FacetDescriptor",
    "Orientation",
    "RoughnessField",
    "TriangleMesh",
    "apply_orientation",
    "color_ramp",
    "facet_arrays",
    "facet_descriptors",
    "load_mesh",
    "load_mesh_bytes",
    "parse_obj",
    "parse_stl_ascii",
    "parse_stl_binary",
    "predict_field",
    "read_field_sidecar",
    "triangle_normals_areas",
    "unit_cube_mesh",
    "write_field_json",
    "write_field_sidecar",
    "write_stl_binary",
]
