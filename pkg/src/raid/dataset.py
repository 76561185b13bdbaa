"""Dataset ingestion: COCO-style polygon annotations and label sidecars.

Annotation files use the standard COCO layout (images, annotations with
polygon segmentation, categories). Only polygon segmentations are honored;
RLE and crowd annotations are skipped and counted. Coordinates in the file
are image-convention (y down); everything in memory is mathematical (y up),
with the flip applied symmetrically on load and save.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Optional

from shapely.ops import unary_union

from .errors import InvalidPolygonError, ParseError
from .geometry import PolygonSet, clip_to_rect


@dataclass(frozen=True)
class LabeledRegion:
    region_id: str
    label: str
    geometry: PolygonSet


@dataclass(frozen=True)
class ImageRecord:
    image_id: str
    width: int
    height: int
    regions: tuple[LabeledRegion, ...]

    @property
    def area(self) -> float:
        return float(self.width) * float(self.height)


@dataclass(frozen=True)
class RelationshipCandidate:
    image_id: str
    source_region_id: str
    source_label: str
    target_label: str
    merged_target: PolygonSet

    @property
    def key(self) -> tuple[str, str, str]:
        return (self.image_id, self.source_region_id, self.target_label)


@dataclass
class LoadReport:
    """Counts of records skipped or repaired during ingestion."""

    skipped_rle: int = 0
    skipped_crowd: int = 0
    dropped_unknown_category: int = 0
    dropped_degenerate: int = 0

    @property
    def total_warnings(self) -> int:
        return (
            self.skipped_rle
            + self.skipped_crowd
            + self.dropped_unknown_category
            + self.dropped_degenerate
        )


@dataclass
class Dataset:
    images: list[ImageRecord]
    report: LoadReport = field(default_factory=LoadReport)

    def image(self, image_id: str) -> Optional[ImageRecord]:
        for img in self.images:
            if img.image_id == image_id:
                return img
        return None


def _flip_rings(rings: list[list[tuple[float, float]]], height: float):
    return [[(x, height - y) for x, y in ring] for ring in rings]


def load_dataset(path: str) -> Dataset:
    """Parse a COCO-style annotation file into validated image records."""
    try:
        with open(path, "r", encoding="utf-8") as f:
            raw = json.load(f)
    except OSError as e:
        raise ParseError(f"cannot read annotations: {e}") from e
    except json.JSONDecodeError as e:
        raise ParseError(
            f"annotations are not valid JSON (line {e.lineno}, column {e.colno})"
        ) from e

    for key in ("images", "annotations", "categories"):
        if key not in raw or not isinstance(raw[key], list):
            raise ParseError(f"annotations missing required list field '{key}'")

    categories = {}
    for idx, cat in enumerate(raw["categories"]):
        try:
            categories[cat["id"]] = str(cat["name"])
        except (KeyError, TypeError) as e:
            raise ParseError(f"categories[{idx}] lacks id/name") from e

    images = {}
    order = []
    for idx, img in enumerate(raw["images"]):
        try:
            image_id = str(img["id"])
            width = int(img["width"])
            height = int(img["height"])
        except (KeyError, TypeError, ValueError) as e:
            raise ParseError(f"images[{idx}] lacks id/width/height") from e
        if width <= 0 or height <= 0:
            raise ParseError(f"images[{idx}] has non-positive dimensions")
        images[image_id] = (width, height, [])
        order.append(image_id)

    report = LoadReport()
    for idx, ann in enumerate(raw["annotations"]):
        try:
            image_id = str(ann["image_id"])
            region_id = str(ann["id"])
            category_id = ann["category_id"]
            segmentation = ann["segmentation"]
        except (KeyError, TypeError) as e:
            raise ParseError(f"annotations[{idx}] lacks required fields") from e
        if image_id not in images:
            raise ParseError(f"annotations[{idx}] references unknown image {image_id}")
        if ann.get("iscrowd", 0):
            report.skipped_crowd += 1
            continue
        if isinstance(segmentation, dict):
            report.skipped_rle += 1
            continue
        if category_id not in categories:
            report.dropped_unknown_category += 1
            continue
        width, height, regions = images[image_id]
        rings = []
        for flat in segmentation:
            if len(flat) < 6 or len(flat) % 2 != 0:
                continue  # degenerate ring, dropped below if nothing remains
            rings.append(list(zip(flat[0::2], flat[1::2])))
        geometry = _build_region(rings, width, height)
        if geometry is None:
            report.dropped_degenerate += 1
            continue
        regions.append(LabeledRegion(region_id, categories[category_id], geometry))

    return Dataset(
        images=[
            ImageRecord(image_id, *images[image_id][:2], tuple(images[image_id][2]))
            for image_id in order
        ],
        report=report,
    )


def _build_region(rings, width, height) -> Optional[PolygonSet]:
    """Repair, y-flip, and clip one annotation's rings; None if degenerate."""
    usable = []
    for ring in _flip_rings(rings, height):
        try:
            part = PolygonSet.from_rings([ring])
        except InvalidPolygonError:
            continue
        if not part.is_empty:
            usable.append(part.geom)
    if not usable:
        return None
    merged = PolygonSet.from_shapely(unary_union(usable))
    clipped = clip_to_rect(merged, width, height)
    if clipped.is_empty or clipped.area <= 0.0:
        return None
    return clipped


def load_annotations(path: str) -> list[ImageRecord]:
    """Image records only; use load_dataset for the skip/repair counts."""
    return load_dataset(path).images


def enumerate_relationships(
    img: ImageRecord, source_label_filter: Optional[str] = None
) -> list[RelationshipCandidate]:
    """Candidate (source region, target label group) pairs of one image.

    Every region with positive area is a source; for each, every label
    carried by at least one other region forms a target group (the union of
    those regions, never including the source polygon itself). Candidates
    are ordered by source position in the record, then target label.
    """
    out = []
    for source in img.regions:
        if source_label_filter is not None and source.label != source_label_filter:
            continue
        if source.geometry.area <= 0.0:
            continue
        groups: dict[str, list] = {}
        for other in img.regions:
            if other.region_id == source.region_id:
                continue
            groups.setdefault(other.label, []).append(other.geometry.geom)
        for label in sorted(groups):
            merged = PolygonSet.from_shapely(unary_union(groups[label]))
            if merged.is_empty:
                continue
            out.append(
                RelationshipCandidate(
                    image_id=img.image_id,
                    source_region_id=source.region_id,
                    source_label=source.label,
                    target_label=label,
                    merged_target=merged,
                )
            )
    return out


# --- writers and the relationship-label sidecar ------------------------------

def save_annotations(images: Iterable[ImageRecord], path: str) -> None:
    """Write records back to the annotation schema (y flipped to image
    convention). Labels become the category list in first-seen order."""
    categories: dict[str, int] = {}
    images_out = []
    annotations = []
    for img in images:
        images_out.append(
            {"id": img.image_id, "width": img.width, "height": img.height}
        )
        for region in img.regions:
            if region.label not in categories:
                categories[region.label] = len(categories) + 1
            segmentation = []
            for coords, _is_hole in region.geometry.rings():
                flat = []
                for x, y in coords:
                    flat.extend([round(float(x), 4), round(float(img.height - y), 4)])
                segmentation.append(flat)
            annotations.append(
                {
                    "id": region.region_id,
                    "image_id": img.image_id,
                    "category_id": categories[region.label],
                    "segmentation": segmentation,
                    "iscrowd": 0,
                }
            )
    doc = {
        "images": images_out,
        "annotations": annotations,
        "categories": [{"id": v, "name": k} for k, v in categories.items()],
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(doc, f, indent=1)
        f.write("\n")


def load_relationship_labels(path: str) -> dict[tuple[str, str, str], frozenset[str]]:
    """Sidecar class labels keyed by (image_id, source_region_id, target_label)."""
    try:
        with open(path, "r", encoding="utf-8") as f:
            raw = json.load(f)
    except OSError as e:
        raise ParseError(f"cannot read relationship labels: {e}") from e
    except json.JSONDecodeError as e:
        raise ParseError(
            f"relationship labels are not valid JSON (line {e.lineno})"
        ) from e
    if "labels" not in raw or not isinstance(raw["labels"], list):
        raise ParseError("relationship labels missing 'labels' list")
    out = {}
    for idx, row in enumerate(raw["labels"]):
        try:
            key = (str(row["image_id"]), str(row["source_region_id"]), str(row["target_label"]))
            classes = frozenset(str(c) for c in row["classes"])
        except (KeyError, TypeError) as e:
            raise ParseError(f"labels[{idx}] lacks required fields") from e
        out[key] = classes
    return out


def save_relationship_labels(
    labels: dict[tuple[str, str, str], frozenset[str]], path: str
) -> None:
    rows = [
        {
            "image_id": image_id,
            "source_region_id": source_region_id,
            "target_label": target_label,
            "classes": sorted(classes),
        }
        for (image_id, source_region_id, target_label), classes in sorted(labels.items())
    ]
    with open(path, "w", encoding="utf-8") as f:
        json.dump({"labels": rows}, f, indent=1)
        f.write("\n")
