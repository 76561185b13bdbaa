"""Command line entry points: index building, queries, evaluation, data gen.

Exit codes: 0 success, 1 usage error, 2 data error (bad files, missing
records), 3 internal error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from .classify import (
    ClassifierConfig,
    SYNTHETIC_CLASSES,
    loocv,
    relationships_from_dataset,
    render_report,
    synthetic_dataset,
)
from .dataset import (
    load_dataset,
    load_relationship_labels,
    save_annotations,
    save_relationship_labels,
)
from .errors import RaidError
from .indexing import (
    QuerySpec,
    VerbStore,
    build_index,
    load_index,
    query,
    save_index,
)
from .service import result_payload


class UsageError(Exception):
    pass


def _cmd_build_index(args) -> int:
    t0 = time.monotonic()
    dataset = load_dataset(args.annotations)
    index = build_index(
        dataset,
        kind=args.descriptor,
        source_label=args.source_label,
        threads=args.threads,
    )
    save_index(index, args.out)
    elapsed = time.monotonic() - t0
    skipped = index.skipped_empty + index.skipped_degenerate
    print(
        f"indexed {len(index)} relationships "
        f"(skipped {skipped}) in {elapsed:.2f}s -> {args.out}"
    )
    return 0


def _sketch_descriptor(path, index):
    from .baseline import shape_context
    from .descriptor import raid
    from .errors import ParseError
    from .geometry import PolygonSet

    try:
        body = json.load(open(path, "r", encoding="utf-8"))
    except OSError as e:
        raise ParseError(f"cannot read sketch file {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ParseError(f"{path}: invalid JSON: {e}") from e
    try:
        width = float(body["width"])
        height = float(body["height"])
        source_rings = body["source"]
        target_rings = body["target"]
    except (KeyError, TypeError, ValueError) as e:
        raise ParseError(
            f"{path}: sketch needs source, target, width, height"
        ) from e

    def flip(rings):
        return [[(float(x), height - float(y)) for x, y in ring] for ring in rings]

    source = PolygonSet.from_rings(flip(source_rings), holes=body.get("source_holes"))
    target = PolygonSet.from_rings(flip(target_rings), holes=body.get("target_holes"))
    if index.kind == "sc":
        return shape_context(source, target, index.config)
    return raid(source, target, index.config, image_area=width * height)


def _key_descriptor(args, index, images_by_id):
    from .baseline import shape_context
    from .dataset import enumerate_relationships
    from .descriptor import raid
    from .errors import NotFoundError

    img = images_by_id.get(args.from_image)
    if img is None:
        raise NotFoundError(f"image {args.from_image!r} not in --annotations")
    key = (args.from_image, args.source_region, args.target_label)
    cand = next(
        (c for c in enumerate_relationships(img) if c.key == key), None
    )
    if cand is None:
        raise NotFoundError(f"no relationship {key} in dataset")
    src = next(
        r.geometry for r in img.regions if r.region_id == args.source_region
    )
    if index.kind == "sc":
        return shape_context(src, cand.merged_target, index.config)
    return raid(src, cand.merged_target, index.config, image_area=img.area)


def _cmd_query(args) -> int:
    sources = [
        bool(args.from_image or args.source_region),
        args.verb is not None,
        args.sketch is not None,
    ]
    if sum(sources) != 1:
        raise UsageError(
            "give exactly one of --from-image/--source-region/--target-label, "
            "--verb, or --sketch"
        )
    index = load_index(args.index)
    images_by_id = {}
    if args.annotations:
        images_by_id = {
            img.image_id: img for img in load_dataset(args.annotations).images
        }

    if args.from_image or args.source_region:
        for field, flag in (
            (args.from_image, "--from-image"),
            (args.source_region, "--source-region"),
            (args.target_label, "--target-label"),
        ):
            if not field:
                raise UsageError(f"image queries need {flag}")
        if not args.annotations:
            raise UsageError("--from-image queries need --annotations")
        descriptor = _key_descriptor(args, index, images_by_id)
    elif args.verb is not None:
        descriptor = VerbStore(args.verbs or args.index + ".verbs").lookup(
            args.verb
        ).descriptor
    else:
        descriptor = _sketch_descriptor(args.sketch, index)

    # --target-label both names the query pair and filters results, exactly
    # like the target_label field of the service query body
    spec = QuerySpec(
        descriptor=descriptor,
        source_label=args.source_label,
        target_label=args.target_label,
        min_area_fraction=args.min_area_frac,
        top_n=args.top_n,
    )
    results = query(index, spec)
    payload = result_payload(results, images_by_id)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            json.dump({"results": payload}, f, indent=1)
            f.write("\n")
        print(f"wrote {len(payload)} results -> {args.out}")
    else:
        print(f"{'rank':>4}  {'distance':>10}  result")
        for i, r in enumerate(payload, start=1):
            print(
                f"{i:>4}  {r['distance']:>10.6f}  "
                f"{r['image_id']} / {r['source_region_id']} "
                f"({r['source_label']}) -> {r['target_label']}"
                f"  area={r['area_fraction']:.3f}"
            )
    if args.contact_sheet:
        _render_contact_sheet(payload, args.contact_sheet)
        print(f"contact sheet -> {args.contact_sheet}")
    return 0


def _render_contact_sheet(payload, path):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    n = max(1, len(payload))
    cols = min(5, n)
    rows = (n + cols - 1) // cols
    fig, axes = plt.subplots(rows, cols, figsize=(3 * cols, 3 * rows))
    axes = np.atleast_1d(axes).ravel()
    for ax in axes[n:]:
        ax.axis("off")
    for ax, r in zip(axes, payload):
        ax.set_title(
            f"{r['image_id']}  d={r['distance']:.4f}", fontsize=8
        )
        for key, color in (("source_outline", "tab:blue"), ("target_outline", "tab:red")):
            for ring in r.get(key, {}).get("rings", []):
                xs = [p[0] for p in ring] + [ring[0][0]]
                ys = [p[1] for p in ring] + [ring[0][1]]
                ax.plot(xs, ys, color=color, linewidth=1.2)
        if "width" in r:
            ax.set_xlim(0, r["width"])
            ax.set_ylim(r["height"], 0)  # y grows downward on images
        else:
            ax.invert_yaxis()
        ax.set_aspect("equal")
        ax.tick_params(labelsize=6)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def _parse_thresholds(text):
    parts = text.split(":")
    if len(parts) != 3:
        raise UsageError("--thresholds expects START:STOP:STEP")
    try:
        start, stop, step = (float(p) for p in parts)
    except ValueError as e:
        raise UsageError(f"--thresholds has a non-number: {e}") from e
    if step <= 0 or stop < start:
        raise UsageError("--thresholds needs step > 0 and stop >= start")
    out = []
    t = start
    while t <= stop + 1e-9:
        out.append(round(t, 6))
        t += step
    return tuple(out)


def _cmd_eval(args) -> int:
    t0 = time.monotonic()
    dataset = load_dataset(args.dataset)
    labels = load_relationship_labels(args.labels)
    items = relationships_from_dataset(
        dataset.images, labels, kind=args.descriptor
    )
    class_list = tuple(sorted({c for it in items for c in it.classes}))
    if not class_list:
        raise UsageError("label file contains no classes")
    cfg = ClassifierConfig(k=args.k, class_list=class_list)
    report = loocv(items, cfg, thresholds=_parse_thresholds(args.thresholds))
    written = render_report(report, args.report)
    elapsed = time.monotonic() - t0
    print(
        f"{args.descriptor}: {report.n_items} items, "
        f"macro F1 {report.macro_f1:.3f}, micro F1 {report.micro_f1:.3f} "
        f"({elapsed:.1f}s)"
    )
    for p in written:
        print(f"  {p}")
    return 0


def _cmd_gen_synthetic(args) -> int:
    import os

    classes = (
        tuple(s for s in args.classes.split(",") if s)
        if args.classes
        else SYNTHETIC_CLASSES
    )
    images, labels = synthetic_dataset(classes, args.per_class, args.seed)
    os.makedirs(args.out, exist_ok=True)
    ann_path = os.path.join(args.out, "annotations.json")
    labels_path = os.path.join(args.out, "labels.json")
    save_annotations(images, ann_path)
    save_relationship_labels(labels, labels_path)
    print(
        f"generated {len(images)} images over {len(classes)} classes -> "
        f"{ann_path}, {labels_path}"
    )
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(
        index_path=args.index,
        annotations_path=args.annotations,
        verb_store_path=args.verbs,
        static_dir=args.static,
    )
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="raid",
        description="Spatial relationship descriptors over polygonal regions.",
    )
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("build-index", help="compute descriptors for a dataset")
    p.add_argument("--annotations", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--descriptor", choices=("raid", "sc"), default="raid")
    p.add_argument("--source-label", default=None)
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=_cmd_build_index)

    p = sub.add_parser("query", help="ranked search against an index")
    p.add_argument("--index", required=True)
    p.add_argument("--annotations", default=None, help="dataset for outlines and --from-image")
    p.add_argument("--from-image", default=None)
    p.add_argument("--source-region", default=None)
    p.add_argument("--verb", default=None)
    p.add_argument("--verbs", default=None, help="verb store path (default INDEX.verbs)")
    p.add_argument("--sketch", default=None, help="JSON file: source/target rings, width, height")
    p.add_argument("--source-label", default=None)
    p.add_argument("--target-label", default=None)
    p.add_argument("--min-area-frac", type=float, default=0.01)
    p.add_argument("--top-n", type=int, default=20)
    p.add_argument("--out", default=None, help="write results JSON here")
    p.add_argument("--contact-sheet", default=None, help="render outlines grid PNG")
    p.set_defaults(func=_cmd_query)

    p = sub.add_parser("eval", help="leave-one-out classification benchmark")
    p.add_argument("--dataset", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--descriptor", choices=("raid", "sc"), default="raid")
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--thresholds", default="0.1:0.9:0.1")
    p.add_argument("--report", required=True)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("gen-synthetic", help="emit a synthetic benchmark dataset")
    p.add_argument("--classes", default=None, help="comma-separated (default: all)")
    p.add_argument("--per-class", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_gen_synthetic)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--index", default=None)
    p.add_argument("--annotations", default=None)
    p.add_argument("--verbs", default=None)
    p.add_argument("--static", default=None, help="UI bundle directory")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 0 if not e.code else 1
    if getattr(args, "func", None) is None:
        parser.print_help()
        return 1
    try:
        return args.func(args)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return 1
    except RaidError as e:
        print(f"error: {e.message}", file=sys.stderr)
        return 2
    except Exception as e:  # noqa: BLE001
        print(f"internal error: {e!r}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
