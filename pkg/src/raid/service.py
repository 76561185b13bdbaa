"""HTTP API over the library: dataset browsing, descriptors, queries, verbs.

Every endpoint is a thin adapter around the corresponding library call; the
service owns the wire conventions (JSON bodies, image-style y-down polygon
coordinates) and nothing else. The index is loaded read-only at startup;
the verb store and the in-memory feedback log are the only writable state.
"""

from __future__ import annotations

import threading
import uuid

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from .baseline import BaselineDescriptor, shape_context
from .dataset import enumerate_relationships, load_dataset
from .descriptor import DescriptorConfig, RaidDescriptor, raid
from .errors import (
    BadRequestError,
    ConfigMismatchError,
    NotFoundError,
    RaidError,
)
from .geometry import PolygonSet
from .indexing import (
    QuerySpec,
    VerbStore,
    load_index,
    precision_at_n,
    query,
)

_ERROR_STATUS = {"not_found": 404, "conflict": 409}


class ServiceState:
    def __init__(
        self,
        index_path=None,
        annotations_path=None,
        verb_store_path=None,
    ):
        self.index = load_index(index_path) if index_path else None
        self.images = (
            load_dataset(annotations_path).images if annotations_path else ()
        )
        self.images_by_id = {img.image_id: img for img in self.images}
        self.verbs = VerbStore(verb_store_path) if verb_store_path else None
        self.rankings: dict[str, dict] = {}
        self.lock = threading.Lock()

    @property
    def config(self) -> DescriptorConfig:
        return self.index.config if self.index else DescriptorConfig()

    @property
    def kind(self) -> str:
        return self.index.kind if self.index else "raid"


def _require(state, attr, what):
    value = getattr(state, attr)
    if value is None:
        raise BadRequestError(f"service is running without {what}")
    return value


def _flip_rings(rings, height):
    out = []
    for ring in rings:
        if not isinstance(ring, (list, tuple)) or len(ring) < 3:
            raise BadRequestError("each polygon ring needs at least 3 vertices")
        try:
            out.append(
                [(float(x), float(height) - float(y)) for x, y in ring]
            )
        except (TypeError, ValueError) as e:
            raise BadRequestError(f"malformed polygon ring: {e}") from e
    return out


def _polygon_from_wire(body, key, height):
    rings = body.get(key)
    if not rings:
        raise BadRequestError(f"missing {key} polygon")
    holes = body.get(f"{key}_holes")
    return PolygonSet.from_rings(_flip_rings(rings, height), holes=holes)


def _region_payload(geometry, height):
    rings = []
    holes = []
    for coords, is_hole in geometry.rings():
        rings.append(
            [[float(x), float(height) - float(y)] for x, y in coords]
        )
        holes.append(bool(is_hole))
    return {"rings": rings, "holes": holes}


def _image_payload(img):
    return {
        "image_id": img.image_id,
        "width": img.width,
        "height": img.height,
        "regions": [
            {
                "region_id": r.region_id,
                "label": r.label,
                **_region_payload(r.geometry, img.height),
            }
            for r in img.regions
        ],
    }


def _descriptor_payload(desc):
    payload = {
        "values": [float(v) for v in desc.flat],
        "r_max": float(desc.r_max),
        "kind": "sc" if isinstance(desc, BaselineDescriptor) else "raid",
    }
    if isinstance(desc, RaidDescriptor):
        payload["fallback_bins"] = [list(kl) for kl in desc.fallback_bins]
    return payload


def result_payload(results, images_by_id):
    """Wire form of ranked query results, shared with the CLI.

    Outlines come from the dataset when it is available; entries without a
    loaded image carry only the key fields and distance.
    """
    out = []
    for r in results:
        entry = {
            "image_id": r.image_id,
            "source_region_id": r.source_region_id,
            "source_label": r.source_label,
            "target_label": r.target_label,
            "area_fraction": r.area_fraction,
            "distance": r.distance,
        }
        img = images_by_id.get(r.image_id)
        if img is not None:
            entry["width"] = img.width
            entry["height"] = img.height
            src = next(
                (
                    reg
                    for reg in img.regions
                    if reg.region_id == r.source_region_id
                ),
                None,
            )
            if src is not None:
                entry["source_outline"] = _region_payload(
                    src.geometry, img.height
                )
            cand = next(
                (
                    c
                    for c in enumerate_relationships(img)
                    if c.key == r.key
                ),
                None,
            )
            if cand is not None:
                entry["target_outline"] = _region_payload(
                    cand.merged_target, img.height
                )
        out.append(entry)
    return out


def _descriptor_for_key(state, image_id, source_region_id, target_label):
    img = state.images_by_id.get(image_id)
    if img is None:
        raise NotFoundError(f"image {image_id!r} not in dataset")
    cand = next(
        (
            c
            for c in enumerate_relationships(img)
            if c.key == (image_id, source_region_id, target_label)
        ),
        None,
    )
    if cand is None:
        raise NotFoundError(
            f"no relationship ({image_id}, {source_region_id}, "
            f"{target_label}) in dataset"
        )
    src = next(
        r.geometry for r in img.regions if r.region_id == source_region_id
    )
    if state.kind == "sc":
        return shape_context(src, cand.merged_target, state.config)
    return raid(src, cand.merged_target, state.config, image_area=img.area)


def _query_descriptor(state, body):
    """Resolve the query descriptor from exactly one of the three sources."""
    sources = [
        s
        for s in ("descriptor", "verb", "image_id")
        if body.get(s) is not None
    ]
    if len(sources) != 1:
        raise BadRequestError(
            "provide exactly one of descriptor, verb, or image_id + "
            "source_region_id + target_label"
        )
    if sources[0] == "descriptor":
        values = body["descriptor"].get("values")
        if values is None:
            raise BadRequestError("descriptor.values is missing")
        try:
            return np.asarray(values, dtype=np.float64)
        except (TypeError, ValueError) as e:
            raise BadRequestError(f"malformed descriptor values: {e}") from e
    if sources[0] == "verb":
        store = _require(state, "verbs", "a verb store")
        return store.lookup(str(body["verb"])).descriptor
    for field in ("source_region_id", "target_label"):
        if body.get(field) is None:
            raise BadRequestError(f"image queries need {field}")
    return _descriptor_for_key(
        state,
        str(body["image_id"]),
        str(body["source_region_id"]),
        str(body["target_label"]),
    )


def _int_param(value, name, minimum):
    try:
        value = int(value)
    except (TypeError, ValueError) as e:
        raise BadRequestError(f"{name} must be an integer") from e
    if value < minimum:
        raise BadRequestError(f"{name} must be at least {minimum}")
    return value


def _float_param(value, name):
    try:
        return float(value)
    except (TypeError, ValueError) as e:
        raise BadRequestError(f"{name} must be a number") from e


def create_app(
    index_path=None,
    annotations_path=None,
    verb_store_path=None,
    static_dir=None,
) -> FastAPI:
    app = FastAPI(title="raid service", docs_url=None, redoc_url=None)
    state = ServiceState(index_path, annotations_path, verb_store_path)
    app.state.raid = state

    @app.exception_handler(RaidError)
    async def _handle_raid_error(request: Request, exc: RaidError):
        return JSONResponse(
            status_code=_ERROR_STATUS.get(exc.code, 400),
            content={
                "error": {
                    "code": exc.code,
                    "message": exc.message,
                    "detail": exc.detail,
                }
            },
        )

    @app.get("/images")
    async def list_images(limit: int = 50, offset: int = 0):
        limit = _int_param(limit, "limit", 1)
        offset = _int_param(offset, "offset", 0)
        page = state.images[offset : offset + limit]
        return {
            "total": len(state.images),
            "images": [_image_payload(img) for img in page],
        }

    @app.get("/images/{image_id}")
    async def get_image(image_id: str):
        img = state.images_by_id.get(image_id)
        if img is None:
            raise NotFoundError(f"image {image_id!r} not in dataset")
        return _image_payload(img)

    @app.post("/descriptor")
    async def compute_descriptor(body: dict):
        width = _float_param(body.get("width") or 0, "width")
        height = _float_param(body.get("height") or 0, "height")
        if width <= 0 or height <= 0:
            raise BadRequestError("width and height must be positive")
        source = _polygon_from_wire(body, "source", height)
        target = _polygon_from_wire(body, "target", height)
        kind = body.get("kind", "raid")
        if kind == "sc":
            desc = shape_context(source, target, state.config)
        elif kind == "raid":
            desc = raid(source, target, state.config, image_area=width * height)
        else:
            raise BadRequestError(f"unknown descriptor kind {kind!r}")
        return _descriptor_payload(desc)

    @app.post("/query")
    async def run_query(body: dict):
        index = _require(state, "index", "an index")
        descriptor = _query_descriptor(state, body)
        spec = QuerySpec(
            descriptor=descriptor,
            source_label=body.get("source_label"),
            target_label=body.get("target_label"),
            min_area_fraction=_float_param(
                body.get("min_area_fraction", 0.01), "min_area_fraction"
            ),
            top_n=_int_param(body.get("top_n", 20), "top_n", 1),
        )
        results = query(index, spec)
        query_id = uuid.uuid4().hex
        with state.lock:
            state.rankings[query_id] = {
                "keys": [r.key for r in results],
                "feedback": {},
            }
        return {
            "query_id": query_id,
            "results": result_payload(results, state.images_by_id),
        }

    @app.get("/verbs")
    async def list_verbs():
        store = _require(state, "verbs", "a verb store")
        return {"verbs": store.names()}

    @app.get("/verbs/{name}")
    async def get_verb(name: str):
        store = _require(state, "verbs", "a verb store")
        entry = store.lookup(name)
        return {
            "name": entry.verb,
            "created_from": entry.created_from,
            "descriptor": _descriptor_payload(entry.descriptor),
        }

    @app.post("/verbs")
    async def save_verb(body: dict):
        store = _require(state, "verbs", "a verb store")
        name = body.get("name")
        if not name:
            raise BadRequestError("verb name is missing")
        payload = body.get("descriptor") or {}
        values = payload.get("values")
        r_max = payload.get("r_max")
        if values is None or r_max is None:
            raise BadRequestError("descriptor.values and descriptor.r_max are required")
        kind = payload.get("kind", state.kind)
        cfg = state.config
        try:
            flat = np.asarray(values, dtype=np.float64)
        except (TypeError, ValueError) as e:
            raise BadRequestError(f"malformed descriptor values: {e}") from e
        if kind == "sc":
            shape = (cfg.angular_bins_point, cfg.radial_bins_point)
        elif kind == "raid":
            shape = (
                cfg.angular_bins_point,
                cfg.radial_bins_point,
                cfg.angular_bins_outer,
                cfg.radial_bins_outer,
            )
        else:
            raise BadRequestError(f"unknown descriptor kind {kind!r}")
        if flat.size != int(np.prod(shape)):
            raise ConfigMismatchError(
                f"descriptor has {flat.size} values, expected {int(np.prod(shape))}"
            )
        bins = flat.reshape(shape)
        if kind == "sc":
            desc = BaselineDescriptor(bins=bins, r_max=float(r_max), config=cfg)
        else:
            desc = RaidDescriptor(bins=bins, r_max=float(r_max), config=cfg)
        entry = store.save(
            str(name), desc, created_from=str(body.get("created_from", ""))
        )
        return {"name": entry.verb, "created_from": entry.created_from}

    @app.post("/feedback")
    async def record_feedback(body: dict):
        query_id = body.get("query_id")
        relevant = body.get("relevant")
        if query_id is None or relevant is None:
            raise BadRequestError("feedback needs query_id and relevant")
        for field in ("image_id", "source_region_id", "target_label"):
            if body.get(field) is None:
                raise BadRequestError(f"feedback needs {field}")
        key = (
            str(body["image_id"]),
            str(body["source_region_id"]),
            str(body["target_label"]),
        )
        with state.lock:
            ranking = state.rankings.get(str(query_id))
            if ranking is None:
                raise NotFoundError(f"unknown query id {query_id!r}")
            if key not in ranking["keys"]:
                raise NotFoundError(
                    f"result {key} is not part of query {query_id!r}"
                )
            ranking["feedback"][key] = bool(relevant)
            labeled = len(ranking["feedback"])
        return {"query_id": query_id, "labeled": labeled}

    @app.get("/queries/{query_id}/precision")
    async def precision_curve(query_id: str):
        with state.lock:
            ranking = state.rankings.get(query_id)
            if ranking is None:
                raise NotFoundError(f"unknown query id {query_id!r}")
            keys = list(ranking["keys"])
            feedback = dict(ranking["feedback"])
        flags = []
        for key in keys:
            if key not in feedback:
                break
            flags.append(feedback[key])
        points = precision_at_n(None, flags)
        return {
            "query_id": query_id,
            "points": [{"n": n, "precision": p} for n, p in points],
        }

    if static_dir:
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    return app
