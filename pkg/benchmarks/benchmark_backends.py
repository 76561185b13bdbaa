"""Compare the compiled and pure-numpy kernel backends.

Runs each backend in a subprocess (the backend is chosen at import time from
RAID_BACKEND) and prints a timing table: descriptor throughput, brute-force
L1 scan, and index build over a small synthetic corpus.

Usage: python3 benchmarks/benchmark_backends.py [--pairs 30] [--scan-rows 236000]
"""

import argparse
import json
import math
import os
import subprocess
import sys
import time


def _random_pairs(n, seed=13):
    import numpy as np

    from raid.descriptor import compute_r_max
    from raid.geometry import PolygonSet

    rng = np.random.default_rng(seed)

    def convex(center, radius):
        ang = np.sort(rng.uniform(0, 2 * math.pi, 10))
        rad = radius * rng.uniform(0.6, 1.0, 10)
        pts = [
            (center[0] + r * math.cos(a), center[1] + r * math.sin(a))
            for a, r in zip(ang, rad)
        ]
        return PolygonSet.from_rings([pts])

    pairs = []
    for _ in range(n):
        src = convex((0.0, 0.0), 2.5)
        r_max = compute_r_max(src)
        c = src.geom.centroid
        ang = rng.uniform(0, 2 * math.pi)
        d = rng.uniform(0.2, 0.9) * r_max
        tgt = convex(
            (c.x + d * math.cos(ang), c.y + d * math.sin(ang)),
            rng.uniform(0.3, 1.2) * r_max,
        )
        pairs.append((src, tgt))
    return pairs


def _worker(args):
    import numpy as np

    from raid import _kernels
    from raid.descriptor import raid
    from raid.indexing import build_index

    t0 = time.perf_counter()
    _kernels.warmup()
    warmup_s = time.perf_counter() - t0

    pairs = _random_pairs(args.pairs)
    best = math.inf
    for _ in range(3):
        t0 = time.perf_counter()
        for src, tgt in pairs:
            raid(src, tgt, image_area=100.0)
        best = min(best, time.perf_counter() - t0)
    descriptor_ms = best / len(pairs) * 1e3

    rng = np.random.default_rng(7)
    mat = rng.random((args.scan_rows, 256)).astype(np.float32)
    probe = rng.random(256)
    _kernels.l1_scan(mat[:64], probe)
    scan_s = math.inf
    for _ in range(3):
        t0 = time.perf_counter()
        _kernels.l1_scan(mat, probe)
        scan_s = min(scan_s, time.perf_counter() - t0)

    from raid.dataset import ImageRecord, LabeledRegion
    from raid.geometry import PolygonSet

    rng = np.random.default_rng(5)
    labels = ["person", "horse", "table", "dog"]
    images = []
    for i in range(20):
        regions = []
        for j in range(int(rng.integers(3, 6))):
            x0, y0 = float(rng.uniform(5, 70)), float(rng.uniform(5, 50))
            side = float(rng.uniform(8, 20))
            ring = [(x0, y0), (x0 + side, y0), (x0 + side, y0 + side), (x0, y0 + side)]
            regions.append(
                LabeledRegion(f"r{j}", labels[int(rng.integers(0, 4))], PolygonSet.from_rings([ring]))
            )
        images.append(ImageRecord(f"img{i:03d}", 100, 80, tuple(regions)))
    t0 = time.perf_counter()
    index = build_index(images)
    build_s = time.perf_counter() - t0

    print(
        json.dumps(
            {
                "backend": _kernels.BACKEND,
                "warmup_s": warmup_s,
                "descriptor_ms": descriptor_ms,
                "scan_s": scan_s,
                "build_s": build_s,
                "build_records": len(index),
            }
        )
    )
    return 0


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--pairs", type=int, default=30)
    parser.add_argument("--scan-rows", type=int, default=236_000)
    parser.add_argument("--worker", action="store_true", help=argparse.SUPPRESS)
    args = parser.parse_args()
    if args.worker:
        return _worker(args)

    rows = []
    for backend in ("numba", "numpy"):
        env = dict(os.environ, RAID_BACKEND=backend)
        cmd = [
            sys.executable,
            os.path.abspath(__file__),
            "--worker",
            "--pairs",
            str(args.pairs),
            "--scan-rows",
            str(args.scan_rows),
        ]
        out = subprocess.run(
            cmd, env=env, capture_output=True, text=True, check=True
        )
        rows.append(json.loads(out.stdout.strip().splitlines()[-1]))

    print(f"{'backend':<8} {'warmup':>8} {'descriptor':>12} {'scan':>10} {'build':>10}")
    for r in rows:
        print(
            f"{r['backend']:<8} {r['warmup_s']:>7.2f}s {r['descriptor_ms']:>10.2f}ms "
            f"{r['scan_s'] * 1e3:>8.0f}ms {r['build_s']:>9.2f}s"
        )
    if len(rows) == 2 and rows[1]["descriptor_ms"] > 0:
        speedup = rows[1]["descriptor_ms"] / rows[0]["descriptor_ms"]
        print(f"\ncompiled backend is {speedup:.0f}x faster per descriptor "
              f"({rows[0]['build_records']} records in the build corpus)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
