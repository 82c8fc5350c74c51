"""Triangle-mesh readers and writers: binary/ASCII STL and OBJ.

Vertices are stored unwelded for STL (three slots per facet); OBJ keeps
its own vertex sharing. Stored file normals are retained for reference but
all analysis recomputes normals from geometry, since shipped normals are
frequently wrong.
"""

from __future__ import annotations

import re
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import CorruptFileError, ParseError, ValidationError

BINARY_STL_HEADER = 80
BINARY_STL_RECORD = 50  # 12 float32 + uint16 attribute

_STL_RECORD_DTYPE = np.dtype([
    ("normal", "<f4", (3,)),
    ("vertices", "<f4", (3, 3)),
    ("attr", "<u2"),
])


@dataclass
class TriangleMesh:
    """Indexed triangle soup; analysis never needs topology."""

    vertices: np.ndarray  # (n, 3) float64
    triangles: np.ndarray  # (m, 3) int
    source_normals: np.ndarray | None = None  # (m, 3) as stored in the file

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float)
        self.triangles = np.asarray(self.triangles, dtype=int)
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 3:
            raise ValidationError(f"vertices must be (n, 3), got {self.vertices.shape}")
        if self.triangles.ndim != 2 or self.triangles.shape[1] != 3:
            raise ValidationError(f"triangles must be (m, 3), got {self.triangles.shape}")
        if len(self.triangles) < 1:
            raise ValidationError("mesh needs at least one triangle")
        if not np.all(np.isfinite(self.vertices)):
            raise ValidationError("mesh vertices must be finite")
        if self.triangles.min(initial=0) < 0 or self.triangles.max(initial=0) >= len(self.vertices):
            raise ValidationError("triangle indices out of vertex range")

    @property
    def triangle_count(self) -> int:
        return len(self.triangles)

    def corner_array(self) -> np.ndarray:
        """(m, 3, 3) corner coordinates."""
        return self.vertices[self.triangles]

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        return self.vertices.min(axis=0), self.vertices.max(axis=0)


def _is_consistent_binary_stl(data: bytes) -> bool:
    if len(data) < BINARY_STL_HEADER + 4:
        return False
    (count,) = struct.unpack_from("<I", data, BINARY_STL_HEADER)
    return count >= 1 and len(data) == BINARY_STL_HEADER + 4 + count * BINARY_STL_RECORD


def parse_stl_binary(data: bytes) -> TriangleMesh:
    if len(data) < BINARY_STL_HEADER + 4:
        raise CorruptFileError("binary STL shorter than its 84-byte preamble")
    (count,) = struct.unpack_from("<I", data, BINARY_STL_HEADER)
    expected = BINARY_STL_HEADER + 4 + count * BINARY_STL_RECORD
    if len(data) != expected:
        raise CorruptFileError(
            f"binary STL declares {count} triangles ({expected} bytes) but holds {len(data)} bytes"
        )
    if count == 0:
        raise ValidationError("binary STL contains no triangles")
    records = np.frombuffer(data, dtype=_STL_RECORD_DTYPE, count=count, offset=BINARY_STL_HEADER + 4)
    vertices = records["vertices"].astype(float).reshape(-1, 3)
    triangles = np.arange(3 * count).reshape(-1, 3)
    return TriangleMesh(vertices=vertices, triangles=triangles,
                        source_normals=records["normal"].astype(float))


_ASCII_FACET_RE = re.compile(
    r"facet\s+normal\s+(\S+)\s+(\S+)\s+(\S+).*?"
    r"vertex\s+(\S+)\s+(\S+)\s+(\S+)\s+"
    r"vertex\s+(\S+)\s+(\S+)\s+(\S+)\s+"
    r"vertex\s+(\S+)\s+(\S+)\s+(\S+)",
    re.DOTALL,
)


def parse_stl_ascii(text: str) -> TriangleMesh:
    if not text.lstrip().startswith("solid"):
        raise ParseError("ASCII STL must start with 'solid'")
    normals = []
    corners = []
    for m in _ASCII_FACET_RE.finditer(text):
        try:
            values = [float(g) for g in m.groups()]
        except ValueError as exc:
            raise ParseError(f"ASCII STL: non-numeric coordinate: {exc}")
        normals.append(values[0:3])
        corners.append(values[3:12])
    if not corners:
        raise ParseError("ASCII STL contains no facets")
    vertices = np.array(corners, dtype=float).reshape(-1, 3)
    triangles = np.arange(len(vertices)).reshape(-1, 3)
    return TriangleMesh(vertices=vertices, triangles=triangles,
                        source_normals=np.array(normals, dtype=float))


def parse_obj(text: str) -> TriangleMesh:
    """OBJ reader for v/f records; vn, vt and materials are ignored.

    Polygon faces are fan-triangulated. Indices are 1-based; negative
    indices count back from the current vertex list.
    """
    vertices: list[list[float]] = []
    faces: list[tuple[int, int, int]] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        tag = parts[0]
        if tag == "v":
            if len(parts) < 4:
                raise ParseError("OBJ vertex needs 3 coordinates", line=line_no)
            try:
                vertices.append([float(parts[1]), float(parts[2]), float(parts[3])])
            except ValueError:
                raise ParseError(f"OBJ vertex has non-numeric coordinate: {line!r}", line=line_no)
        elif tag == "f":
            idx = []
            for token in parts[1:]:
                head = token.split("/")[0]
                try:
                    raw_index = int(head)
                except ValueError:
                    raise ParseError(f"OBJ face has non-numeric index: {token!r}", line=line_no)
                if raw_index < 0:
                    resolved = len(vertices) + raw_index
                else:
                    resolved = raw_index - 1
                if resolved < 0 or resolved >= len(vertices):
                    raise ParseError(
                        f"OBJ face index {raw_index} out of range (have {len(vertices)} vertices)",
                        line=line_no,
                    )
                idx.append(resolved)
            if len(idx) < 3:
                raise ParseError("OBJ face needs at least 3 vertices", line=line_no)
            for a, b in zip(idx[1:-1], idx[2:]):
                faces.append((idx[0], a, b))
        # ignore vn, vt, usemtl, o, g, s, mtllib
    if not faces:
        raise ParseError("OBJ contains no faces")
    return TriangleMesh(vertices=np.array(vertices, dtype=float),
                        triangles=np.array(faces, dtype=int))


def load_mesh_bytes(data: bytes, fmt: str = "auto", name_hint: str = "") -> TriangleMesh:
    """Parse mesh bytes as stl-binary, stl-ascii, obj, stl (either), or auto.

    Auto detection checks binary STL first (80-byte header plus a
    consistent triangle count), then ASCII STL ('solid' prefix and a
    parseable body), then OBJ by the ``name_hint`` extension or, for
    nameless payloads, a best-effort OBJ parse.
    """
    fmt = (fmt or "auto").lower()
    if fmt == "stl-binary":
        return parse_stl_binary(data)
    if fmt == "stl-ascii":
        return parse_stl_ascii(data.decode("utf-8", errors="replace"))
    if fmt == "obj":
        return parse_obj(data.decode("utf-8", errors="replace"))
    if fmt == "stl":
        if _is_consistent_binary_stl(data):
            return parse_stl_binary(data)
        text = data.decode("utf-8", errors="replace")
        if text.lstrip().startswith("solid"):
            return parse_stl_ascii(text)
        raise CorruptFileError("payload is neither a consistent binary STL nor ASCII STL")
    if fmt != "auto":
        raise ValidationError(f"unknown mesh format {fmt!r}")

    if _is_consistent_binary_stl(data):
        return parse_stl_binary(data)
    text = data.decode("utf-8", errors="replace")
    if text.lstrip().startswith("solid"):
        try:
            return parse_stl_ascii(text)
        except ParseError:
            pass
    suffix = Path(name_hint).suffix.lower()
    if suffix == ".obj" or not suffix:
        return parse_obj(text)
    if suffix == ".stl":
        raise CorruptFileError(
            "file named .stl is neither a consistent binary STL (declared count does not "
            "match the byte length) nor a parseable ASCII STL"
        )
    raise ParseError(f"cannot auto-detect mesh format for {name_hint!r}")


def load_mesh(path, fmt: str = "auto") -> TriangleMesh:
    """Read a mesh file; see load_mesh_bytes for format handling."""
    path = Path(path)
    return load_mesh_bytes(path.read_bytes(), fmt=fmt, name_hint=path.name)


def write_stl_binary(mesh: TriangleMesh, path) -> None:
    """Write binary STL with recomputed geometric normals.

    Coordinates are stored as float32; loading a file written from
    float32-valued geometry reproduces the coordinates bit-exactly.
    """
    from .geometry import triangle_normals_areas

    normals, _ = triangle_normals_areas(mesh)
    count = mesh.triangle_count
    records = np.zeros(count, dtype=_STL_RECORD_DTYPE)
    records["normal"] = normals.astype(np.float32)
    records["vertices"] = mesh.corner_array().astype(np.float32)
    header = b"roughcast binary stl".ljust(BINARY_STL_HEADER, b" ")
    with open(path, "wb") as f:
        f.write(header)
        f.write(struct.pack("<I", count))
        f.write(records.tobytes())
