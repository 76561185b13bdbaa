"""Descriptor index over a dataset, ranked L1 retrieval, and the verb store.

The index is a flat table: one row per relationship candidate, holding the
record key (image, source region, target label), the source area fraction
and the flattened descriptor as float32. Retrieval is an exact brute-force
L1 scan; at a few hundred thousand rows that is faster than maintaining any
approximate structure and keeps ranking exactly reproducible.
"""

from __future__ import annotations

import base64
import hashlib
import json
import os
import struct
import tempfile
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from ._kernels import l1_scan
from .baseline import BaselineDescriptor, shape_context
from .dataset import ImageRecord, enumerate_relationships
from .descriptor import DescriptorConfig, RaidDescriptor, raid
from .errors import (
    BadRequestError,
    ConfigMismatchError,
    ConflictError,
    DegenerateRegionError,
    EmptyRelationshipError,
    NotFoundError,
    ParseError,
)

INDEX_MAGIC = b"RAIDIDX1"

DESCRIPTOR_KINDS = ("raid", "sc")


def _descriptor_length(config: DescriptorConfig, kind: str) -> int:
    if kind == "sc":
        return config.angular_bins_point * config.radial_bins_point
    return config.n_bins


@dataclass
class DescriptorIndex:
    """Immutable descriptor table plus the string tables that key it."""

    config: DescriptorConfig
    kind: str
    dataset_digest: str
    image_ids: tuple[str, ...]
    region_ids: tuple[str, ...]
    labels: tuple[str, ...]
    image_idx: NDArray[np.int32]
    region_idx: NDArray[np.int32]
    source_label_idx: NDArray[np.int32]
    target_label_idx: NDArray[np.int32]
    area_fraction: NDArray[np.float32]
    descriptors: NDArray[np.float32]
    skipped_empty: int = 0
    skipped_degenerate: int = 0

    def __len__(self) -> int:
        return int(self.descriptors.shape[0])

    def record_key(self, row: int) -> tuple[str, str, str]:
        return (
            self.image_ids[self.image_idx[row]],
            self.region_ids[self.region_idx[row]],
            self.labels[self.target_label_idx[row]],
        )


@dataclass(frozen=True)
class QuerySpec:
    """Query descriptor plus the label and saliency filters to apply."""

    descriptor: object
    source_label: str | None = None
    target_label: str | None = None
    min_area_fraction: float = 0.01
    top_n: int = 20

    def __post_init__(self) -> None:
        if self.top_n < 1:
            raise BadRequestError("top_n must be at least 1")
        if self.min_area_fraction < 0.0:
            raise BadRequestError("min_area_fraction must be nonnegative")


@dataclass(frozen=True)
class QueryResult:
    image_id: str
    source_region_id: str
    source_label: str
    target_label: str
    area_fraction: float
    distance: float

    @property
    def key(self) -> tuple[str, str, str]:
        return (self.image_id, self.source_region_id, self.target_label)


def dataset_digest(images) -> str:
    """Content hash of a dataset, stable across runs and thread counts."""
    h = hashlib.sha256()
    for img in images:
        h.update(img.image_id.encode("utf-8"))
        h.update(struct.pack("<dd", float(img.width), float(img.height)))
        for reg in img.regions:
            h.update(reg.region_id.encode("utf-8"))
            h.update(b"\x00")
            h.update(reg.label.encode("utf-8"))
            h.update(b"\x00")
            h.update(reg.geometry.geom.wkb)
    return h.hexdigest()


def _image_rows(img: ImageRecord, config, kind, source_label):
    by_id = {r.region_id: r for r in img.regions}
    rows = []
    empty = degenerate = 0
    for cand in enumerate_relationships(img, source_label_filter=source_label):
        src = by_id[cand.source_region_id].geometry
        try:
            if kind == "sc":
                vec = shape_context(src, cand.merged_target, config).flat
            else:
                vec = raid(
                    src, cand.merged_target, config, image_area=img.area
                ).flat
        except EmptyRelationshipError:
            empty += 1
            continue
        except DegenerateRegionError:
            degenerate += 1
            continue
        frac = src.area / img.area
        rows.append(
            (
                cand.image_id,
                cand.source_region_id,
                cand.source_label,
                cand.target_label,
                frac,
                np.asarray(vec, dtype=np.float32),
            )
        )
    return rows, empty, degenerate


def build_index(
    dataset,
    config: DescriptorConfig | None = None,
    kind: str = "raid",
    source_label: str | None = None,
    threads: int = 1,
) -> DescriptorIndex:
    """One descriptor record per valid relationship candidate.

    ``dataset`` is a Dataset or a sequence of ImageRecord. Candidates whose
    descriptor preconditions fail are skipped and counted. The build is
    deterministic for a given dataset and config regardless of ``threads``:
    images are processed independently and merged in input order.
    """
    if kind not in DESCRIPTOR_KINDS:
        raise BadRequestError(f"unknown descriptor kind {kind!r}")
    if config is None:
        config = DescriptorConfig()
    images = tuple(dataset.images if hasattr(dataset, "images") else dataset)

    def worker(img):
        return _image_rows(img, config, kind, source_label)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            per_image = list(pool.map(worker, images))
    else:
        per_image = [worker(img) for img in images]

    rows = []
    skipped_empty = skipped_degenerate = 0
    for img_rows, empty, degenerate in per_image:
        rows.extend(img_rows)
        skipped_empty += empty
        skipped_degenerate += degenerate
    rows.sort(key=lambda r: (r[0], r[1], r[3]))

    image_ids = tuple(sorted({r[0] for r in rows}))
    region_ids = tuple(sorted({r[1] for r in rows}))
    labels = tuple(sorted({r[2] for r in rows} | {r[3] for r in rows}))
    image_pos = {s: i for i, s in enumerate(image_ids)}
    region_pos = {s: i for i, s in enumerate(region_ids)}
    label_pos = {s: i for i, s in enumerate(labels)}

    n = len(rows)
    width = _descriptor_length(config, kind)
    desc = np.zeros((n, width), dtype=np.float32)
    for i, r in enumerate(rows):
        desc[i] = r[5]
    return DescriptorIndex(
        config=config,
        kind=kind,
        dataset_digest=dataset_digest(images),
        image_ids=image_ids,
        region_ids=region_ids,
        labels=labels,
        image_idx=np.array([image_pos[r[0]] for r in rows], dtype=np.int32),
        region_idx=np.array([region_pos[r[1]] for r in rows], dtype=np.int32),
        source_label_idx=np.array(
            [label_pos[r[2]] for r in rows], dtype=np.int32
        ),
        target_label_idx=np.array(
            [label_pos[r[3]] for r in rows], dtype=np.int32
        ),
        area_fraction=np.array([r[4] for r in rows], dtype=np.float32),
        descriptors=desc,
        skipped_empty=skipped_empty,
        skipped_degenerate=skipped_degenerate,
    )


def _record_dtype(width: int) -> np.dtype:
    return np.dtype(
        [
            ("image", "<i4"),
            ("region", "<i4"),
            ("source_label", "<i4"),
            ("target_label", "<i4"),
            ("area", "<f4"),
            ("descriptor", "<f4", (width,)),
        ]
    )


def save_index(index: DescriptorIndex, path: str) -> None:
    """Magic, length-prefixed JSON header, then fixed-width binary records."""
    width = index.descriptors.shape[1]
    header = {
        "kind": index.kind,
        "config": index.config.to_dict(),
        "dataset_digest": index.dataset_digest,
        "descriptor_length": width,
        "record_count": len(index),
        "images": list(index.image_ids),
        "regions": list(index.region_ids),
        "labels": list(index.labels),
        "skipped": {
            "empty_relationship": index.skipped_empty,
            "degenerate_region": index.skipped_degenerate,
        },
    }
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode(
        "utf-8"
    )
    recs = np.zeros(len(index), dtype=_record_dtype(width))
    recs["image"] = index.image_idx
    recs["region"] = index.region_idx
    recs["source_label"] = index.source_label_idx
    recs["target_label"] = index.target_label_idx
    recs["area"] = index.area_fraction
    recs["descriptor"] = index.descriptors
    try:
        with open(path, "wb") as f:
            f.write(INDEX_MAGIC)
            f.write(struct.pack("<I", len(blob)))
            f.write(blob)
            f.write(recs.tobytes())
    except OSError as e:
        raise ParseError(f"cannot write index file {path}: {e}") from e


def load_index(path: str) -> DescriptorIndex:
    try:
        with open(path, "rb") as f:
            data = f.read()
    except OSError as e:
        raise ParseError(f"cannot read index file {path}: {e}") from e
    if len(data) < 12 or data[:8] != INDEX_MAGIC:
        raise ParseError(f"{path}: not an index file (bad magic)")
    (hlen,) = struct.unpack_from("<I", data, 8)
    if 12 + hlen > len(data):
        raise ParseError(f"{path}: truncated header")
    try:
        header = json.loads(data[12 : 12 + hlen].decode("utf-8"))
        kind = header["kind"]
        config = DescriptorConfig.from_dict(header["config"])
        width = int(header["descriptor_length"])
        count = int(header["record_count"])
        image_ids = tuple(header["images"])
        region_ids = tuple(header["regions"])
        labels = tuple(header["labels"])
        skipped = header["skipped"]
    except (KeyError, ValueError, TypeError) as e:
        raise ParseError(f"{path}: malformed index header: {e}") from e
    if kind not in DESCRIPTOR_KINDS:
        raise ParseError(f"{path}: unknown descriptor kind {kind!r}")
    rec_dtype = _record_dtype(width)
    body = data[12 + hlen :]
    if len(body) != count * rec_dtype.itemsize:
        raise ParseError(
            f"{path}: expected {count} records, body holds "
            f"{len(body) // rec_dtype.itemsize}"
        )
    recs = np.frombuffer(body, dtype=rec_dtype, count=count)
    return DescriptorIndex(
        config=config,
        kind=kind,
        dataset_digest=header["dataset_digest"],
        image_ids=image_ids,
        region_ids=region_ids,
        labels=labels,
        image_idx=recs["image"].astype(np.int32),
        region_idx=recs["region"].astype(np.int32),
        source_label_idx=recs["source_label"].astype(np.int32),
        target_label_idx=recs["target_label"].astype(np.int32),
        area_fraction=recs["area"].astype(np.float32),
        descriptors=np.ascontiguousarray(recs["descriptor"]),
        skipped_empty=int(skipped.get("empty_relationship", 0)),
        skipped_degenerate=int(skipped.get("degenerate_region", 0)),
    )


def _query_vector(descriptor, index: DescriptorIndex) -> NDArray[np.float64]:
    cfg = getattr(descriptor, "config", None)
    if cfg is not None and cfg != index.config:
        raise ConfigMismatchError(
            "query descriptor config differs from index config"
        )
    # float32 storage, float64 query: differences of float32 values are
    # exact in float64, so the ranking matches exact arithmetic instead of
    # drifting on per-element rounding when distances nearly tie.
    vec = np.asarray(
        getattr(descriptor, "flat", descriptor), dtype=np.float32
    ).astype(np.float64).reshape(-1)
    if vec.shape[0] != index.descriptors.shape[1]:
        raise ConfigMismatchError(
            f"query has {vec.shape[0]} values, index records have "
            f"{index.descriptors.shape[1]}"
        )
    return vec


def query(index: DescriptorIndex, spec: QuerySpec) -> list[QueryResult]:
    """Ranked scan: filter by labels and area fraction, sort by L1 distance.

    Records are stored pre-sorted by (image_id, source_region_id,
    target_label), so a stable argsort breaks distance ties in exactly that
    order.
    """
    vec = _query_vector(spec.descriptor, index)
    mask = index.area_fraction >= np.float32(spec.min_area_fraction)
    for label, idx_arr in (
        (spec.source_label, index.source_label_idx),
        (spec.target_label, index.target_label_idx),
    ):
        if label is None:
            continue
        try:
            pos = index.labels.index(label)
        except ValueError:
            return []
        mask &= idx_arr == pos
    rows = np.nonzero(mask)[0]
    if rows.size == 0:
        return []
    dists = l1_scan(np.ascontiguousarray(index.descriptors[rows]), vec)
    order = np.argsort(dists, kind="stable")[: spec.top_n]
    out = []
    for o in order:
        row = int(rows[o])
        out.append(
            QueryResult(
                image_id=index.image_ids[index.image_idx[row]],
                source_region_id=index.region_ids[index.region_idx[row]],
                source_label=index.labels[index.source_label_idx[row]],
                target_label=index.labels[index.target_label_idx[row]],
                area_fraction=float(index.area_fraction[row]),
                distance=float(dists[o]),
            )
        )
    return out


def precision_at_n(results, relevance) -> list[tuple[int, float]]:
    """Precision of the first n results for each fully labeled prefix.

    ``relevance`` is either a sequence of booleans aligned with ``results``
    or a mapping from record key to boolean; with a mapping the curve stops
    at the longest prefix whose results are all labeled.
    """
    if isinstance(relevance, dict):
        flags = []
        for r in results:
            key = r.key if hasattr(r, "key") else tuple(r)
            if key not in relevance:
                break
            flags.append(bool(relevance[key]))
    else:
        flags = [bool(x) for x in relevance]
    out = []
    hits = 0
    for n, flag in enumerate(flags, start=1):
        if flag:
            hits += 1
        out.append((n, hits / n))
    return out


@dataclass(frozen=True)
class VerbEntry:
    verb: str
    descriptor: RaidDescriptor | BaselineDescriptor
    created_from: str = ""


def _encode_verb(entry: VerbEntry) -> list[str]:
    desc = entry.descriptor
    lines = [f"verb: {entry.verb}"]
    if isinstance(desc, RaidDescriptor):
        lines.append("kind: raid")
        fb = " ".join(f"{k},{l}" for k, l in desc.fallback_bins)
        lines.append(f"fallback: {fb or '-'}")
    else:
        lines.append("kind: sc")
    cfg = json.dumps(desc.config.to_dict(), sort_keys=True, separators=(",", ":"))
    lines.append(f"config: {cfg}")
    lines.append(f"r_max: {float(desc.r_max).hex()}")
    lines.append(f"created_from: {entry.created_from}")
    payload = np.ascontiguousarray(desc.bins, dtype="<f8").tobytes()
    lines.append(f"bins: {base64.b64encode(payload).decode('ascii')}")
    return lines


def _decode_verb(fields: dict, path: str) -> VerbEntry:
    try:
        verb = fields["verb"]
        kind = fields["kind"]
        config = DescriptorConfig.from_dict(json.loads(fields["config"]))
        r_max = float.fromhex(fields["r_max"])
        raw = base64.b64decode(fields["bins"])
        flat = np.frombuffer(raw, dtype="<f8").copy()
    except (KeyError, ValueError) as e:
        raise ParseError(f"{path}: malformed verb entry: {e}") from e
    if kind == "sc":
        shape = (config.angular_bins_point, config.radial_bins_point)
    elif kind == "raid":
        shape = (
            config.angular_bins_point,
            config.radial_bins_point,
            config.angular_bins_outer,
            config.radial_bins_outer,
        )
    else:
        raise ParseError(f"{path}: unknown descriptor kind {kind!r}")
    if flat.size != int(np.prod(shape)):
        raise ParseError(
            f"{path}: verb {verb!r} payload has {flat.size} values, "
            f"expected {int(np.prod(shape))}"
        )
    bins = flat.reshape(shape)
    if kind == "sc":
        desc = BaselineDescriptor(bins=bins, r_max=r_max, config=config)
    else:
        fb = fields.get("fallback", "-")
        fallback = tuple(
            tuple(int(v) for v in part.split(","))
            for part in fb.split()
            if part != "-"
        )
        desc = RaidDescriptor(
            bins=bins, r_max=r_max, config=config, fallback_bins=fallback
        )
    return VerbEntry(
        verb=verb, descriptor=desc, created_from=fields.get("created_from", "")
    )


class VerbStore:
    """Named descriptors in a plain text file, one blank-line-separated block
    per verb. Writes are serialized and atomic (temp file + rename); the file
    diffs cleanly under version control.
    """

    def __init__(self, path: str):
        self.path = path
        self._lock = threading.Lock()

    def _read_blocks(self) -> dict[str, dict]:
        if not os.path.exists(self.path):
            return {}
        try:
            text = open(self.path, "r", encoding="utf-8").read()
        except OSError as e:
            raise ParseError(f"cannot read verb store {self.path}: {e}") from e
        entries: dict[str, dict] = {}
        for block in text.split("\n\n"):
            fields = {}
            for line in block.splitlines():
                if not line.strip() or line.startswith("#"):
                    continue
                if ": " not in line:
                    raise ParseError(
                        f"{self.path}: malformed line {line!r}"
                    )
                key, value = line.split(": ", 1)
                fields[key] = value
            if not fields:
                continue
            if "verb" not in fields:
                raise ParseError(f"{self.path}: entry without a verb name")
            entries[fields["verb"]] = fields
        return entries

    def _write_blocks(self, entries: dict[str, dict]) -> None:
        parts = []
        for fields in entries.values():
            parts.append(
                "\n".join(f"{k}: {v}" for k, v in fields.items())
            )
        text = "\n\n".join(parts) + ("\n" if parts else "")
        d = os.path.dirname(os.path.abspath(self.path))
        fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as f:
                f.write(text)
            os.replace(tmp, self.path)
        except OSError:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise

    def save(self, verb: str, descriptor, created_from: str = "") -> VerbEntry:
        if not verb or "\n" in verb or ": " in verb:
            raise BadRequestError(f"invalid verb name {verb!r}")
        entry = VerbEntry(
            verb=verb,
            descriptor=descriptor,
            created_from=" ".join(created_from.split()),
        )
        encoded = _encode_verb(entry)
        fields = dict(line.split(": ", 1) for line in encoded)
        with self._lock:
            entries = self._read_blocks()
            if verb in entries:
                raise ConflictError(f"verb {verb!r} already stored")
            entries[verb] = fields
            self._write_blocks(entries)
        return entry

    def lookup(self, verb: str) -> VerbEntry:
        entries = self._read_blocks()
        if verb not in entries:
            raise NotFoundError(f"verb {verb!r} not found")
        return _decode_verb(entries[verb], self.path)

    def names(self) -> list[str]:
        return list(self._read_blocks().keys())
