"""Multi-label relationship classification and its evaluation harness.

Each class gets an independent binary k-NN vote: the membership probability
of class c is the fraction of the k nearest training descriptors (by L1)
that carry c, and c is predicted when that fraction reaches the threshold.
Evaluation is leave-one-out over a labeled relationship set, with a
threshold sweep and a multi-label confusion matrix.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .baseline import shape_context
from .dataset import enumerate_relationships
from .descriptor import DescriptorConfig, raid
from .errors import (
    ConfigMismatchError,
    EmptyRelationshipError,
    NotFoundError,
    RaidError,
)
from .geometry import PolygonSet

CLASS_NAMES = (
    "surrounded",
    "surrounding",
    "between",
    "bridging",
    "arching_over",
    "crossing",
    "hanging",
    "rising",
    "riding",
)

NONE_LABEL = "none"

DEFAULT_THRESHOLDS = tuple(round(0.1 * i, 1) for i in range(1, 10))


@dataclass(frozen=True)
class LabeledRelationship:
    key: tuple
    descriptor: object
    classes: frozenset[str] = frozenset()


@dataclass(frozen=True)
class ClassifierConfig:
    k: int = 5
    threshold: float = 0.5
    class_list: tuple[str, ...] = CLASS_NAMES

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ConfigMismatchError("k must be at least 1")
        if not 0.0 <= self.threshold <= 1.0:
            raise ConfigMismatchError("threshold must lie in [0, 1]")
        if len(set(self.class_list)) != len(self.class_list):
            raise ConfigMismatchError("class_list has duplicates")
        if NONE_LABEL in self.class_list:
            raise ConfigMismatchError(
                f"{NONE_LABEL!r} marks the empty class set, not a class"
            )


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int
    tp: int = 0
    fp: int = 0
    fn: int = 0


@dataclass(frozen=True)
class ThresholdPoint:
    threshold: float
    per_class: dict[str, ClassMetrics]
    micro_f1: float
    macro_f1: float


@dataclass(frozen=True)
class EvalReport:
    config: ClassifierConfig
    n_items: int
    per_class: dict[str, ClassMetrics]
    micro_f1: float
    macro_f1: float
    confusion: NDArray[np.float64]
    confusion_labels: tuple[str, ...]
    sweep: tuple[ThresholdPoint, ...] = ()


def _flat(descriptor) -> NDArray[np.float64]:
    return np.asarray(
        getattr(descriptor, "flat", descriptor), dtype=np.float64
    ).reshape(-1)


def _descriptor_matrix(items) -> NDArray[np.float64]:
    vecs = [_flat(it.descriptor) for it in items]
    widths = {v.shape[0] for v in vecs}
    if len(widths) > 1:
        raise ConfigMismatchError(
            f"descriptors have mixed lengths {sorted(widths)}"
        )
    return np.stack(vecs)


def _check_classes(items, class_list) -> None:
    allowed = set(class_list)
    for it in items:
        extra = set(it.classes) - allowed
        if extra:
            raise ConfigMismatchError(
                f"item {it.key} carries classes outside the configured "
                f"list: {sorted(extra)}"
            )


def knn_predict(train, query_descriptor, cfg: ClassifierConfig) -> set[str]:
    """Classes whose share of the k nearest neighbors meets the threshold.

    Neighbor ties at the k-th distance are broken by position in ``train``,
    so the result depends on training order only through that rule.
    """
    if not train:
        raise ConfigMismatchError("training set is empty")
    if cfg.k > len(train):
        raise ConfigMismatchError(
            f"k={cfg.k} exceeds training set size {len(train)}"
        )
    _check_classes(train, cfg.class_list)
    mat = _descriptor_matrix(train)
    q = _flat(query_descriptor)
    if q.shape[0] != mat.shape[1]:
        raise ConfigMismatchError(
            f"query has {q.shape[0]} values, training items have {mat.shape[1]}"
        )
    dists = np.abs(mat - q[None, :]).sum(axis=1)
    nearest = np.argsort(dists, kind="stable")[: cfg.k]
    out = set()
    for c in cfg.class_list:
        votes = sum(1 for i in nearest if c in train[i].classes)
        if votes / cfg.k >= cfg.threshold:
            out.add(c)
    return out


def _loo_probabilities(items, cfg) -> NDArray[np.float64]:
    """(n, n_classes) membership probabilities, each row leaving itself out."""
    n = len(items)
    mat = _descriptor_matrix(items)
    carries = np.zeros((n, len(cfg.class_list)), dtype=np.float64)
    for i, it in enumerate(items):
        for j, c in enumerate(cfg.class_list):
            if c in it.classes:
                carries[i, j] = 1.0
    probs = np.zeros((n, len(cfg.class_list)), dtype=np.float64)
    for i in range(n):
        d = np.abs(mat - mat[i][None, :]).sum(axis=1)
        d[i] = np.inf
        nearest = np.argsort(d, kind="stable")[: cfg.k]
        probs[i] = carries[nearest].mean(axis=0)
    return probs


def _metrics_at(actual_sets, probs, cfg, threshold):
    per_class = {}
    tp_all = fp_all = fn_all = 0
    f1s = []
    for j, c in enumerate(cfg.class_list):
        predicted = probs[:, j] >= threshold
        actual = np.array([c in a for a in actual_sets])
        tp = int(np.sum(predicted & actual))
        fp = int(np.sum(predicted & ~actual))
        fn = int(np.sum(~predicted & actual))
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = (
            2 * precision * recall / (precision + recall)
            if precision + recall
            else 0.0
        )
        per_class[c] = ClassMetrics(
            precision=precision,
            recall=recall,
            f1=f1,
            support=int(actual.sum()),
            tp=tp,
            fp=fp,
            fn=fn,
        )
        tp_all += tp
        fp_all += fp
        fn_all += fn
        f1s.append(f1)
    micro_p = tp_all / (tp_all + fp_all) if tp_all + fp_all else 0.0
    micro_r = tp_all / (tp_all + fn_all) if tp_all + fn_all else 0.0
    micro_f1 = (
        2 * micro_p * micro_r / (micro_p + micro_r) if micro_p + micro_r else 0.0
    )
    macro_f1 = float(np.mean(f1s)) if f1s else 0.0
    return per_class, micro_f1, macro_f1


def _confusion(actual_sets, predicted_sets, class_list):
    """Fractional multi-label confusion matrix.

    Every (actual class, item) incidence distributes one unit across the
    item's predicted classes (or the none column when nothing is predicted),
    so each row sums to the number of items actually carrying that class.
    Items with an empty actual set count in the none row the same way.
    """
    labels = tuple(class_list) + (NONE_LABEL,)
    pos = {c: i for i, c in enumerate(labels)}
    m = np.zeros((len(labels), len(labels)), dtype=np.float64)
    for actual, predicted in zip(actual_sets, predicted_sets):
        rows = sorted(actual) if actual else [NONE_LABEL]
        cols = sorted(predicted) if predicted else [NONE_LABEL]
        w = 1.0 / len(cols)
        for r in rows:
            for c in cols:
                m[pos[r], pos[c]] += w
    return m, labels


def loocv(data, cfg: ClassifierConfig, thresholds=DEFAULT_THRESHOLDS) -> EvalReport:
    """Leave-one-out evaluation: every item is predicted from all others."""
    if len(data) < cfg.k + 1:
        raise ConfigMismatchError(
            f"leave-one-out with k={cfg.k} needs at least {cfg.k + 1} items, "
            f"got {len(data)}"
        )
    _check_classes(data, cfg.class_list)
    actual_sets = [set(it.classes) for it in data]
    probs = _loo_probabilities(data, cfg)

    per_class, micro_f1, macro_f1 = _metrics_at(
        actual_sets, probs, cfg, cfg.threshold
    )
    predicted_sets = [
        {c for j, c in enumerate(cfg.class_list) if probs[i, j] >= cfg.threshold}
        for i in range(len(data))
    ]
    confusion, labels = _confusion(actual_sets, predicted_sets, cfg.class_list)

    sweep = []
    for t in thresholds:
        pc, mi, ma = _metrics_at(actual_sets, probs, cfg, t)
        sweep.append(
            ThresholdPoint(threshold=t, per_class=pc, micro_f1=mi, macro_f1=ma)
        )
    return EvalReport(
        config=cfg,
        n_items=len(data),
        per_class=per_class,
        micro_f1=micro_f1,
        macro_f1=macro_f1,
        confusion=confusion,
        confusion_labels=labels,
        sweep=tuple(sweep),
    )


# ---------------------------------------------------------------------------
# synthetic benchmark data
# ---------------------------------------------------------------------------

def _ellipse(cx, cy, rx, ry, segs=28):
    ang = np.linspace(0.0, 2.0 * math.pi, segs, endpoint=False)
    return [(cx + rx * math.cos(a), cy + ry * math.sin(a)) for a in ang]


def _rect(cx, cy, w, h):
    return [
        (cx - w / 2, cy - h / 2),
        (cx + w / 2, cy - h / 2),
        (cx + w / 2, cy + h / 2),
        (cx - w / 2, cy + h / 2),
    ]


def _ring(cx, cy, r_in, r_out, segs=32):
    outer = _ellipse(cx, cy, r_out, r_out, segs)
    inner = _ellipse(cx, cy, r_in, r_in, segs)
    return PolygonSet.from_rings([outer, inner], holes=[False, True])


def _half_ring(cx, cy, r_in, r_out, segs=24):
    """Upper half annulus (an arch standing on y = cy)."""
    up = np.linspace(0.0, math.pi, segs + 1)
    pts = [(cx + r_out * math.cos(a), cy + r_out * math.sin(a)) for a in up]
    pts += [
        (cx + r_in * math.cos(a), cy + r_in * math.sin(a)) for a in up[::-1]
    ]
    return PolygonSet.from_rings([pts])


def _poly(ring):
    return PolygonSet.from_rings([ring])


def _blob(rng, cx, cy, r):
    """Roughly circular polygon with jittered aspect."""
    rx = r * rng.uniform(0.9, 1.12)
    ry = r * rng.uniform(0.9, 1.12)
    return _poly(_ellipse(cx, cy, rx, ry))


def _gen_surrounded(rng, u):
    ax = u * rng.uniform(0.95, 1.15)
    ay = u * rng.uniform(0.95, 1.15)
    src = _poly(_rect(0, 0, 2 * ax, 2 * ay))
    base = min(ax, ay)
    r_in = base * rng.uniform(1.15, 1.26)
    r_out = r_in * rng.uniform(1.35, 1.7)
    dx, dy = rng.uniform(-0.08, 0.08, 2) * base
    return src, _ring(dx, dy, r_in, r_out)


def _gen_surrounding(rng, u):
    t = u * rng.uniform(0.5, 0.75)
    r_in = t * rng.uniform(1.2, 1.45)
    r_out = r_in + t * rng.uniform(0.7, 1.1)
    src = _ring(0, 0, r_in, r_out)
    dx, dy = rng.uniform(-0.2, 0.2, 2) * t
    return src, _blob(rng, dx, dy, t)


def _flank_blobs(rng, r_max):
    """Two blobs at mirrored ±x positions, drawn in r_max units.

    Shared by "between" and "bridging" so the two classes agree on where
    the target sits relative to the source reach; only the source shape
    tells them apart.
    """
    d = r_max * rng.uniform(0.82, 0.92)
    r_t = r_max * rng.uniform(0.30, 0.36)
    y1, y2 = rng.uniform(-0.03, 0.03, 2) * r_max
    left = _ellipse(-d, y1, r_t, r_t * rng.uniform(0.92, 1.08))
    right = _ellipse(d, y2, r_t, r_t * rng.uniform(0.92, 1.08))
    return PolygonSet.from_rings([left, right])


def _gen_between(rng, u):
    # narrow upright block so the flanking blobs clear its sides
    ax = 0.45 * u * rng.uniform(0.9, 1.1)
    ay = u * rng.uniform(0.95, 1.1)
    src = _poly(_rect(0, 0, 2 * ax, 2 * ay))
    return src, _flank_blobs(rng, math.hypot(ax, ay))


def _gen_bridging(rng, u):
    L = 1.45 * u * rng.uniform(0.9, 1.1)
    h = L * rng.uniform(0.16, 0.24)
    src = _poly(_rect(0, 0, 2 * L, h))
    # bar ends reach into the two banks it spans
    return src, _flank_blobs(rng, math.hypot(L, h / 2))


def _gen_arching_over(rng, u):
    r_in = 1.1 * u * rng.uniform(0.95, 1.1)
    r_out = r_in * rng.uniform(1.3, 1.5)
    src = _half_ring(0, 0, r_in, r_out)
    r_t = u * rng.uniform(0.45, 0.65)
    cx = rng.uniform(-0.2, 0.2) * u
    cy = r_t * rng.uniform(0.25, 0.7)
    return src, _blob(rng, cx, cy, r_t)


def _gen_crossing(rng, u):
    L = 1.5 * u * rng.uniform(0.9, 1.1)
    h = L * rng.uniform(0.18, 0.3)
    src = _poly(_rect(0, 0, 2 * L, h))
    H = L * rng.uniform(0.75, 1.05)
    w = h * rng.uniform(0.8, 1.3)
    cx = rng.uniform(-0.35, 0.35) * L
    return src, _poly(_rect(cx, 0, w, 2 * H))


def _gen_hanging(rng, u):
    a = u * rng.uniform(0.85, 1.0)
    src = _poly(_rect(0, 0, 2 * a, 2 * a * rng.uniform(0.9, 1.1)))
    L = 1.4 * u * rng.uniform(0.9, 1.1)
    h = 0.3 * u * rng.uniform(0.9, 1.1)
    cx = rng.uniform(-0.4, 0.4) * (L - a)
    bar_bottom = a * rng.uniform(0.8, 0.95)
    return src, _poly(_rect(cx, bar_bottom + h / 2, 2 * L, h))


def _ground_strip(rng, r_max):
    """Wide horizontal slab below the source, drawn in r_max units.

    Shared by "rising" and "riding": same placement relative to the source
    reach, so only how the view varies across the source separates them.
    """
    top = -r_max * rng.uniform(0.68, 0.78)
    h_t = 0.5 * r_max * rng.uniform(0.9, 1.1)
    half_w = r_max * rng.uniform(1.3, 1.6)
    cx = rng.uniform(-0.1, 0.1) * r_max
    return _poly(_rect(cx, top - h_t / 2, 2 * half_w, h_t))


def _gen_rising(rng, u):
    # tall plume rooted in the ground strip it rises from
    H = 1.5 * u * rng.uniform(0.9, 1.1)
    b = 0.18 * H * rng.uniform(0.85, 1.15)
    src = _poly(_rect(0, 0, 2 * b, 2 * H))
    return src, _ground_strip(rng, math.hypot(H, b))


def _gen_riding(rng, u):
    # compact rider sitting on the strip
    ax = u * rng.uniform(0.9, 1.1)
    ay = u * rng.uniform(0.9, 1.1)
    src = _poly(_rect(0, 0, 2 * ax, 2 * ay))
    return src, _ground_strip(rng, math.hypot(ax, ay))


def _gen_none(rng, u):
    a = u * rng.uniform(0.7, 1.0)
    src = _poly(_rect(0, 0, 2 * a, 2 * a * rng.uniform(0.85, 1.15)))
    r_t = u * rng.uniform(0.5, 0.9)
    quadrant = rng.integers(0, 4)
    ang = math.pi / 4 + quadrant * math.pi / 2 + rng.uniform(-0.4, 0.4)
    d = (a + r_t) * rng.uniform(0.75, 1.0)
    return src, _blob(rng, d * math.cos(ang), d * math.sin(ang), r_t)


_GENERATORS = {
    "surrounded": _gen_surrounded,
    "surrounding": _gen_surrounding,
    "between": _gen_between,
    "bridging": _gen_bridging,
    "arching_over": _gen_arching_over,
    "crossing": _gen_crossing,
    "hanging": _gen_hanging,
    "rising": _gen_rising,
    "riding": _gen_riding,
    NONE_LABEL: _gen_none,
}

SYNTHETIC_CLASSES = tuple(_GENERATORS)


def generate_synthetic(class_name, count, rng_seed):
    """Jittered region pairs exemplifying one class; fixed seed, fixed output.

    Returns a list of ((source, target), class set) with an empty class set
    for "none". Sizes, offsets and aspect ratios vary per sample; the pair
    is also shifted off the origin so downstream code cannot rely on
    placement.
    """
    if class_name not in _GENERATORS:
        raise ConfigMismatchError(f"unknown synthetic class {class_name!r}")
    rng = np.random.default_rng(rng_seed)
    classes = (
        frozenset() if class_name == NONE_LABEL else frozenset({class_name})
    )
    out = []
    for _ in range(count):
        u = rng.uniform(8.0, 13.0)
        src, tgt = _GENERATORS[class_name](rng, u)
        dx, dy = rng.uniform(-6.0, 6.0, 2)
        out.append(((src.translated(dx, dy), tgt.translated(dx, dy)), classes))
    return out


SYNTHETIC_IMAGE_SIZE = (160, 130)


def synthetic_dataset(classes, per_class, seed):
    """ImageRecords plus a relationship-label table for a synthetic benchmark.

    Each pair lands in its own image, centered on the canvas; the source
    region is "a", the merged target "b". The per-class seed mixes ``seed``
    with the class's fixed position, so any subset of classes regenerates
    the same geometry.
    """
    from .dataset import ImageRecord, LabeledRegion

    w, h = SYNTHETIC_IMAGE_SIZE
    images = []
    labels = {}
    for cls in classes:
        if cls not in _GENERATORS:
            raise ConfigMismatchError(f"unknown synthetic class {cls!r}")
        ss = np.random.SeedSequence([seed, SYNTHETIC_CLASSES.index(cls)])
        for i, ((src, tgt), cset) in enumerate(
            generate_synthetic(cls, per_class, ss)
        ):
            image_id = f"syn_{cls}_{i:03d}"
            src = src.translated(w / 2, h / 2)
            tgt = tgt.translated(w / 2, h / 2)
            sb, tb = src.bounds, tgt.bounds
            minx, miny = min(sb[0], tb[0]), min(sb[1], tb[1])
            maxx, maxy = max(sb[2], tb[2]), max(sb[3], tb[3])
            if minx < 0 or miny < 0 or maxx > w or maxy > h:
                raise RaidError(f"synthetic pair {image_id} exceeds the canvas")
            images.append(
                ImageRecord(
                    image_id,
                    w,
                    h,
                    (
                        LabeledRegion("s", "a", src),
                        LabeledRegion("t", "b", tgt),
                    ),
                )
            )
            labels[(image_id, "s", "b")] = frozenset(cset)
    return images, labels


def relationships_from_dataset(images, labels, kind="raid", config=None):
    """LabeledRelationships for every labeled candidate key.

    ``labels`` maps (image_id, source_region_id, target_label) to a class
    set, as loaded from the sidecar file. Keys that do not resolve to a
    candidate in the dataset are an error.
    """
    if config is None:
        config = DescriptorConfig()
    by_id = {img.image_id: img for img in images}
    items = []
    for key in sorted(labels):
        image_id, source_region_id, target_label = key
        img = by_id.get(image_id)
        if img is None:
            raise NotFoundError(f"labeled image {image_id!r} not in dataset")
        cand = next(
            (
                c
                for c in enumerate_relationships(img)
                if c.key == key
            ),
            None,
        )
        if cand is None:
            raise NotFoundError(
                f"no candidate ({image_id}, {source_region_id}, "
                f"{target_label}) in dataset"
            )
        src = next(
            r.geometry for r in img.regions if r.region_id == source_region_id
        )
        try:
            if kind == "sc":
                desc = shape_context(src, cand.merged_target, config)
            else:
                desc = raid(src, cand.merged_target, config, image_area=img.area)
        except EmptyRelationshipError as e:
            raise EmptyRelationshipError(
                f"labeled pair {key} has no descriptor: {e.message}"
            ) from e
        items.append(
            LabeledRelationship(
                key=key, descriptor=desc, classes=frozenset(labels[key])
            )
        )
    return items


# ---------------------------------------------------------------------------
# report rendering
# ---------------------------------------------------------------------------

def _metrics_row(name, m):
    return (
        f"{name:>14}  {m.precision:9.3f}  {m.recall:6.3f}  {m.f1:6.3f}"
        f"  {m.support:7d}"
    )


def report_text(report: EvalReport) -> str:
    lines = [
        f"items: {report.n_items}   k: {report.config.k}   "
        f"threshold: {report.config.threshold}",
        "",
        f"{'class':>14}  {'precision':>9}  {'recall':>6}  {'f1':>6}  {'support':>7}",
    ]
    for c in report.config.class_list:
        lines.append(_metrics_row(c, report.per_class[c]))
    lines += [
        "",
        f"micro F1: {report.micro_f1:.3f}",
        f"macro F1: {report.macro_f1:.3f}",
        "",
        "confusion (rows actual, columns predicted):",
    ]
    labels = report.confusion_labels
    width = max(len(c) for c in labels) + 2
    header = " " * width + "".join(f"{c[:9]:>10}" for c in labels)
    lines.append(header)
    for i, c in enumerate(labels):
        row = "".join(f"{report.confusion[i, j]:10.2f}" for j in range(len(labels)))
        lines.append(f"{c:>{width - 1}} {row}")
    lines.append("")
    lines.append("threshold sweep (macro F1 / micro F1):")
    for pt in report.sweep:
        lines.append(
            f"  t={pt.threshold:.1f}  macro={pt.macro_f1:.3f}  micro={pt.micro_f1:.3f}"
        )
    return "\n".join(lines) + "\n"


def report_json(report: EvalReport) -> dict:
    def metrics(m):
        return {
            "precision": m.precision,
            "recall": m.recall,
            "f1": m.f1,
            "support": m.support,
            "tp": m.tp,
            "fp": m.fp,
            "fn": m.fn,
        }

    return {
        "config": {
            "k": report.config.k,
            "threshold": report.config.threshold,
            "class_list": list(report.config.class_list),
        },
        "n_items": report.n_items,
        "per_class": {c: metrics(m) for c, m in report.per_class.items()},
        "micro_f1": report.micro_f1,
        "macro_f1": report.macro_f1,
        "confusion": {
            "labels": list(report.confusion_labels),
            "rows_actual": report.confusion.tolist(),
        },
        "sweep": [
            {
                "threshold": pt.threshold,
                "macro_f1": pt.macro_f1,
                "micro_f1": pt.micro_f1,
                "per_class": {c: metrics(m) for c, m in pt.per_class.items()},
            }
            for pt in report.sweep
        ],
    }


def render_report(report: EvalReport, out_dir: str, plots: bool = True) -> list[str]:
    """Write report.txt and report.json, plus plot images when possible."""
    os.makedirs(out_dir, exist_ok=True)
    written = []
    txt = os.path.join(out_dir, "report.txt")
    with open(txt, "w", encoding="utf-8") as f:
        f.write(report_text(report))
    written.append(txt)
    js = os.path.join(out_dir, "report.json")
    with open(js, "w", encoding="utf-8") as f:
        json.dump(report_json(report), f, indent=1)
        f.write("\n")
    written.append(js)
    if plots:
        try:
            written.extend(_render_plots(report, out_dir))
        except ImportError:
            pass
    return written


def _render_plots(report: EvalReport, out_dir: str) -> list[str]:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    written = []
    ts = [pt.threshold for pt in report.sweep]
    if ts:
        fig, ax = plt.subplots(figsize=(6, 4))
        ax.plot(ts, [pt.macro_f1 for pt in report.sweep], "o-", label="macro F1")
        ax.plot(ts, [pt.micro_f1 for pt in report.sweep], "s-", label="micro F1")
        ax.set_xlabel("membership probability threshold")
        ax.set_ylabel("F1")
        ax.set_ylim(0, 1.05)
        ax.legend()
        ax.grid(True, alpha=0.3)
        p = os.path.join(out_dir, "threshold_sweep.png")
        fig.savefig(p, dpi=120, bbox_inches="tight")
        plt.close(fig)
        written.append(p)

    fig, ax = plt.subplots(figsize=(7, 6))
    labels = report.confusion_labels
    im = ax.imshow(report.confusion, cmap="Blues")
    ax.set_xticks(range(len(labels)), labels, rotation=45, ha="right")
    ax.set_yticks(range(len(labels)), labels)
    ax.set_xlabel("predicted")
    ax.set_ylabel("actual")
    fig.colorbar(im, ax=ax, shrink=0.8)
    p = os.path.join(out_dir, "confusion.png")
    fig.savefig(p, dpi=120, bbox_inches="tight")
    plt.close(fig)
    written.append(p)
    return written
