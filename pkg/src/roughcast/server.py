"""HTTP service exposing model info, mesh upload, and per-facet prediction.

The model is immutable after startup; uploaded meshes live in a bounded
in-memory LRU cache. Prediction handlers are read-only and fully
concurrent, and return exactly what the in-process library computes.
"""

from __future__ import annotations

import math
import os
import threading
import uuid
from collections import OrderedDict
from datetime import datetime, timezone

from fastapi import FastAPI, HTTPException, Request, Response
from fastapi.staticfiles import StaticFiles

from . import __version__
from .errors import ParseError, RoughcastError, ValidationError
from .meshkit import Orientation, TriangleMesh, load_mesh_bytes, predict_field
from .neuralnet import MlpModel
from .schema import ANGLE_MAX, ANGLE_MIN, FEATURE_NAMES, FEATURE_UNITS, PARAM_NAMES, STUDY_LEVELS, ProcessParameters

DEFAULT_CACHE_CAPACITY = 32
DEFAULT_MAX_UPLOAD_BYTES = 64 * 1024 * 1024
MODEL_ENV_VAR = "ROUGHCAST_MODEL"


class MeshCache:
    """Bounded LRU keyed by opaque handle ids.

    Ids are never reused within a process lifetime (uuid4 plus an insert
    counter); only insertion serializes on the lock, lookups just touch
    recency.
    """

    def __init__(self, capacity: int = DEFAULT_CACHE_CAPACITY):
        self.capacity = capacity
        self._lock = threading.Lock()
        self._entries: OrderedDict[str, dict] = OrderedDict()
        self._counter = 0

    def put(self, mesh: TriangleMesh) -> dict:
        with self._lock:
            self._counter += 1
            handle_id = f"m{self._counter:06d}-{uuid.uuid4().hex[:12]}"
            lo, hi = mesh.bounding_box()
            meta = {
                "id": handle_id,
                "triangle_count": mesh.triangle_count,
                "bbox": {"min": [float(v) for v in lo], "max": [float(v) for v in hi]},
                "uploaded_at": datetime.now(timezone.utc).isoformat(),
            }
            self._entries[handle_id] = {"mesh": mesh, "meta": meta}
            while len(self._entries) > self.capacity:
                self._entries.popitem(last=False)
            return meta

    def get(self, handle_id: str) -> TriangleMesh | None:
        with self._lock:
            entry = self._entries.get(handle_id)
            if entry is None:
                return None
            self._entries.move_to_end(handle_id)
            return entry["mesh"]

    def delete(self, handle_id: str) -> bool:
        with self._lock:
            return self._entries.pop(handle_id, None) is not None

    def __len__(self) -> int:
        return len(self._entries)


def _parse_params(payload) -> ProcessParameters:
    if not isinstance(payload, dict):
        raise ValidationError("params must be an object with the seven process parameters")
    missing = [name for name in PARAM_NAMES if name not in payload]
    if missing:
        raise ValidationError(f"missing parameter fields: {', '.join(missing)}")
    bad = []
    values = {}
    for name in PARAM_NAMES:
        try:
            v = float(payload[name])
        except (TypeError, ValueError):
            bad.append(name)
            continue
        if not math.isfinite(v) or v <= 0:
            bad.append(name)
        values[name] = v
    if bad:
        raise ValidationError(f"non-finite or non-positive parameter fields: {', '.join(bad)}")
    return ProcessParameters(**values)


def _parse_orientation(payload) -> Orientation:
    payload = payload or {}
    if not isinstance(payload, dict):
        raise ValidationError("orientation must be an object with rx, ry, rz degrees")
    try:
        return Orientation(
            rx=float(payload.get("rx", 0.0)),
            ry=float(payload.get("ry", 0.0)),
            rz=float(payload.get("rz", 0.0)),
        )
    except (TypeError, ValueError):
        raise ValidationError("orientation fields rx, ry, rz must be numbers")


def _parse_color_range(payload):
    payload = payload or {"mode": "auto"}
    if not isinstance(payload, dict) or payload.get("mode") not in ("auto", "fixed"):
        raise ValidationError("color_range.mode must be 'auto' or 'fixed'")
    if payload["mode"] == "auto":
        return "auto"
    try:
        lo, hi = float(payload["lo"]), float(payload["hi"])
    except (KeyError, TypeError, ValueError):
        raise ValidationError("fixed color_range needs numeric lo and hi")
    if not (math.isfinite(lo) and math.isfinite(hi)) or hi < lo:
        raise ValidationError("fixed color_range needs finite lo <= hi")
    return (lo, hi)


def create_app(model: MlpModel | None = None, model_path: str | None = None,
               cache_capacity: int = DEFAULT_CACHE_CAPACITY,
               max_upload_bytes: int = DEFAULT_MAX_UPLOAD_BYTES,
               static_dir: str | None = None) -> FastAPI:
    """Build the service; the model (if any) is loaded once at startup."""
    if model is None and model_path:
        model = MlpModel.load(model_path)

    app = FastAPI(title="roughcast", version=__version__)
    cache = MeshCache(capacity=cache_capacity)
    app.state.model = model
    app.state.mesh_cache = cache

    def require_model() -> MlpModel:
        if app.state.model is None:
            raise HTTPException(status_code=503, detail="model not ready: no model loaded")
        return app.state.model

    @app.get("/api/health")
    def health():
        return {"status": "ok"}

    @app.get("/api/model/info")
    def model_info():
        m = require_model()
        scaler = m.scaler.to_dict() if m.scaler is not None else None
        return {
            "feature_order": list(m.feature_order),
            "format_version": 1,
            "service_version": __version__,
            "metrics": m.metadata.get("metrics"),
            "scaler": scaler,
            "target_units": "um",
            "factor_ranges": {
                name: {
                    "min": STUDY_LEVELS[name][0],
                    "max": STUDY_LEVELS[name][2],
                    "levels": list(STUDY_LEVELS[name]),
                    "unit": FEATURE_UNITS[name],
                }
                for name in PARAM_NAMES
            },
            "angle_domain": {"min": ANGLE_MIN, "max": ANGLE_MAX, "unit": FEATURE_UNITS["surface_angle"]},
        }

    @app.post("/api/mesh")
    async def upload_mesh(request: Request):
        body = await request.body()
        if len(body) > max_upload_bytes:
            raise HTTPException(status_code=413, detail=f"mesh exceeds {max_upload_bytes} bytes")
        fmt = request.headers.get("X-Mesh-Format", "auto").lower()
        if fmt not in ("stl", "obj", "auto", "stl-binary", "stl-ascii"):
            raise HTTPException(status_code=400, detail=f"unknown X-Mesh-Format {fmt!r}")
        name_hint = request.headers.get("X-Mesh-Name", "")
        try:
            mesh = load_mesh_bytes(body, fmt=fmt, name_hint=name_hint)
        except (ParseError, ValidationError) as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return cache.put(mesh)

    @app.post("/api/predict")
    async def predict(request: Request):
        m = require_model()
        try:
            payload = await request.json()
        except Exception:
            raise HTTPException(status_code=400, detail="request body must be JSON")
        mesh_id = payload.get("mesh_id")
        if not isinstance(mesh_id, str):
            raise HTTPException(status_code=400, detail="mesh_id must be a string")
        mesh = cache.get(mesh_id)
        if mesh is None:
            raise HTTPException(status_code=404, detail=f"mesh handle {mesh_id!r} not found")
        try:
            params = _parse_params(payload.get("params"))
            orientation = _parse_orientation(payload.get("orientation"))
            color_range = _parse_color_range(payload.get("color_range"))
        except ValidationError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        try:
            field = predict_field(m, mesh, orientation, params, color_range=color_range)
        except RoughcastError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        result = field.to_dict()
        result["mesh_id"] = mesh_id
        return result

    @app.delete("/api/mesh/{mesh_id}")
    def delete_mesh(mesh_id: str):
        if not cache.delete(mesh_id):
            raise HTTPException(status_code=404, detail=f"mesh handle {mesh_id!r} not found")
        return Response(status_code=204)

    if static_dir:
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    return app


def resolve_model_path(cli_value: str | None) -> str | None:
    """CLI --model wins; the ROUGHCAST_MODEL env var is the fallback."""
    return cli_value or os.environ.get(MODEL_ENV_VAR) or None
