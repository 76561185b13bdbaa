"""Hot numeric kernels with a numba backend and a pure-numpy fallback.

The backend is selected once at import time from the ``RAID_BACKEND``
environment variable: ``numba`` (default when numba is importable) compiles
the scalar kernels with ``@njit(cache=True, nogil=True)``; ``numpy`` keeps
them as interpreted functions and swaps the array-friendly kernels
(Gaussian assembly, L1 scan) for vectorized numpy implementations.
``nogil`` lets index builds run kernels from multiple Python threads.

Kernels here operate on flat arrays only; geometry objects are unpacked by
the callers. The clipping kernel computes, for a batch of sample points, the
covered-area fraction of a target polygon set in every polar bin by
Sutherland-Hodgman clipping against the convex pie wedges of the polygonized
bins and accumulating signed shoelace areas (holes are CW, so their signed
areas subtract without bookkeeping).

``benchmarks/benchmark_backends.py`` times both backends side by side.
"""

from __future__ import annotations

import math
import os
from typing import NamedTuple

import numpy as np

_env = os.environ.get("RAID_BACKEND", "").strip().lower()
if _env not in ("", "numba", "numpy"):
    raise RuntimeError(f"RAID_BACKEND must be 'numba' or 'numpy', got {_env!r}")

if _env in ("", "numba"):
    try:
        from numba import njit as _njit

        BACKEND = "numba"
    except ImportError:
        if _env == "numba":
            raise
        BACKEND = "numpy"
else:
    BACKEND = "numpy"

if BACKEND == "numba":
    def _jit(fn):
        return _njit(cache=True, nogil=True)(fn)
else:
    def _jit(fn):
        return fn


# ---------------------------------------------------------------------------
# polar bin geometry tables
# ---------------------------------------------------------------------------

class PolarBinTables(NamedTuple):
    """Precomputed geometry for one polar bin layout at a given r_max."""

    n_ang: int
    n_rad: int
    n_chords: int          # chords per bin arc
    wedge_edges: np.ndarray   # (n_ang+1,) angular bin edges, bin 0 centered on +x
    chord_cos: np.ndarray     # (n_ang, n_chords+1) unit arc points per wedge
    chord_sin: np.ndarray
    r_edges: np.ndarray       # (n_rad+1,) radial bin edges {0, ..., r_max}
    pie_area: np.ndarray      # (n_rad+1,) polygonized pie area at each radial edge
    bin_area: np.ndarray      # (n_rad,) polygonized bin areas (same for every wedge)
    chord_cos_half: float     # inradius factor of the chord polygon


def polar_bin_tables(n_ang: int, n_rad: int, r_max: float, arc_segments: int) -> PolarBinTables:
    span = 2.0 * math.pi / n_ang
    n_chords = max(1, int(math.ceil(arc_segments * span / (2.0 * math.pi) - 1e-9)))
    wedge_edges = np.empty(n_ang + 1, dtype=np.float64)
    for a in range(n_ang + 1):
        wedge_edges[a] = -math.pi / n_ang + a * span
    chord_cos = np.empty((n_ang, n_chords + 1), dtype=np.float64)
    chord_sin = np.empty((n_ang, n_chords + 1), dtype=np.float64)
    for a in range(n_ang):
        for m in range(n_chords + 1):
            ang = wedge_edges[a] + span * m / n_chords
            chord_cos[a, m] = math.cos(ang)
            chord_sin[a, m] = math.sin(ang)
    r_edges = np.array([r_max * j / n_rad for j in range(n_rad + 1)], dtype=np.float64)
    sin_step = math.sin(span / n_chords)
    pie_area = 0.5 * n_chords * sin_step * r_edges**2
    bin_area = np.diff(pie_area)
    return PolarBinTables(
        n_ang=n_ang,
        n_rad=n_rad,
        n_chords=n_chords,
        wedge_edges=wedge_edges,
        chord_cos=chord_cos,
        chord_sin=chord_sin,
        r_edges=r_edges,
        pie_area=pie_area,
        bin_area=bin_area,
        chord_cos_half=math.cos(span / (2.0 * n_chords)),
    )


# ---------------------------------------------------------------------------
# scalar clipping kernels
# ---------------------------------------------------------------------------

def _clip_halfplane(inx, iny, n, a, b, c, outx, outy):
    """One Sutherland-Hodgman pass: keep the side where a*x + b*y + c >= 0."""
    m = 0
    px = inx[n - 1]
    py = iny[n - 1]
    ps = a * px + b * py + c
    for i in range(n):
        cx = inx[i]
        cy = iny[i]
        cs = a * cx + b * cy + c
        if cs >= 0.0:
            if ps < 0.0:
                t = ps / (ps - cs)
                outx[m] = px + t * (cx - px)
                outy[m] = py + t * (cy - py)
                m += 1
            outx[m] = cx
            outy[m] = cy
            m += 1
        elif ps >= 0.0:
            t = ps / (ps - cs)
            outx[m] = px + t * (cx - px)
            outy[m] = py + t * (cy - py)
            m += 1
        px = cx
        py = cy
        ps = cs
    return m


def _signed_area(xs, ys, n):
    s = 0.0
    px = xs[n - 1]
    py = ys[n - 1]
    for i in range(n):
        cx = xs[i]
        cy = ys[i]
        s += px * cy - cx * py
        px = cx
        py = cy
    return 0.5 * s


def _ring_stats(verts, v0, v1, sx, sy):
    """Even-odd containment of (sx, sy) and squared min distance to ring edges."""
    inside = False
    mind = 1.0e300
    px = verts[v1 - 1, 0] - sx
    py = verts[v1 - 1, 1] - sy
    for i in range(v0, v1):
        cx = verts[i, 0] - sx
        cy = verts[i, 1] - sy
        if (py > 0.0) != (cy > 0.0):
            xint = px + (0.0 - py) * (cx - px) / (cy - py)
            if xint > 0.0:
                inside = not inside
        dx = cx - px
        dy = cy - py
        seg2 = dx * dx + dy * dy
        if seg2 > 0.0:
            t = -(px * dx + py * dy) / seg2
            if t < 0.0:
                t = 0.0
            elif t > 1.0:
                t = 1.0
            qx = px + t * dx
            qy = py + t * dy
        else:
            qx = px
            qy = py
        d2 = qx * qx + qy * qy
        if d2 < mind:
            mind = d2
        px = cx
        py = cy
    return inside, mind


def _pie_clip_area(bx, by, m, ccos, csin, wedge, n_chords, r, wx, wy, lbuf):
    """Signed area of (polygon in buffers) clipped to the pie polygon of radius r.

    Returns NaN if an intermediate polygon would overflow the work buffers.
    """
    cur_x, cur_y, cur_m = bx, by, m
    out_x, out_y = wx, wy
    for ch in range(n_chords):
        if 2 * cur_m + 4 > lbuf:
            return math.nan
        x0 = r * ccos[wedge, ch]
        y0 = r * csin[wedge, ch]
        x1 = r * ccos[wedge, ch + 1]
        y1 = r * csin[wedge, ch + 1]
        a = -(y1 - y0)
        b = x1 - x0
        c = -(a * x0 + b * y0)
        cur_m = _clip_halfplane(cur_x, cur_y, cur_m, a, b, c, out_x, out_y)
        if cur_m < 3:
            return 0.0
        tx, ty = cur_x, cur_y
        cur_x, cur_y = out_x, out_y
        out_x, out_y = tx, ty
    return _signed_area(cur_x, cur_y, cur_m)


def _point_histograms_impl(
    samples,
    verts,
    ring_off,
    ring_bbox,
    ring_sign,
    wedge_edges,
    chord_cos,
    chord_sin,
    r_edges,
    pie_area,
    bin_area,
    cos_half,
    out,
    flags,
):
    n_samples = samples.shape[0]
    n_rings = ring_off.shape[0] - 1
    n_ang = wedge_edges.shape[0] - 1
    n_rad = r_edges.shape[0] - 1
    n_chords = chord_cos.shape[1] - 1
    r_max = r_edges[n_rad]
    r_max2 = r_max * r_max
    lbuf = 4 * verts.shape[0] + 64 * (n_chords + 2) + 1024

    areas = np.zeros((n_ang, n_rad), dtype=np.float64)
    b1x = np.empty(lbuf, dtype=np.float64)
    b1y = np.empty(lbuf, dtype=np.float64)
    b2x = np.empty(lbuf, dtype=np.float64)
    b2y = np.empty(lbuf, dtype=np.float64)
    b3x = np.empty(lbuf, dtype=np.float64)
    b3y = np.empty(lbuf, dtype=np.float64)
    corner = np.empty(4, dtype=np.float64)

    two_pi = 2.0 * math.pi

    for q in range(n_samples):
        sx = samples[q, 0]
        sy = samples[q, 1]
        for a in range(n_ang):
            for j in range(n_rad):
                areas[a, j] = 0.0
        overflow = False

        for rg in range(n_rings):
            v0 = ring_off[rg]
            v1 = ring_off[rg + 1]
            nv = v1 - v0
            bx0 = ring_bbox[rg, 0] - sx
            by0 = ring_bbox[rg, 1] - sy
            bx1 = ring_bbox[rg, 2] - sx
            by1 = ring_bbox[rg, 3] - sy
            # nearest point of the bbox to the sample
            ncx = 0.0 if bx0 <= 0.0 <= bx1 else (bx0 if bx0 > 0.0 else bx1)
            ncy = 0.0 if by0 <= 0.0 <= by1 else (by0 if by0 > 0.0 else by1)
            if ncx * ncx + ncy * ncy >= r_max2:
                continue

            contains, min_edge2 = _ring_stats(verts, v0, v1, sx, sy)

            if min_edge2 >= r_max2:
                if contains:
                    # ring covers the whole descriptor disk around this sample
                    sgn = ring_sign[rg]
                    for a in range(n_ang):
                        for j in range(n_rad):
                            areas[a, j] += sgn * bin_area[j]
                continue

            # angular pruning: interval subtended by the bbox, when s is outside it
            prune = not (bx0 <= 0.0 <= bx1 and by0 <= 0.0 <= by1)
            ilo = 0.0
            ihi = 0.0
            if prune:
                corner[0] = math.atan2(by0, bx0)
                corner[1] = math.atan2(by0, bx1)
                corner[2] = math.atan2(by1, bx1)
                corner[3] = math.atan2(by1, bx0)
                base = corner[0]
                lo = 0.0
                hi = 0.0
                for k in range(1, 4):
                    d = corner[k] - base
                    while d > math.pi:
                        d -= two_pi
                    while d <= -math.pi:
                        d += two_pi
                    if d < lo:
                        lo = d
                    if d > hi:
                        hi = d
                ilo = base + lo - 1e-9
                ihi = base + hi + 1e-9

            for a in range(n_ang):
                w_lo = wedge_edges[a]
                w_hi = wedge_edges[a + 1]
                if prune:
                    # overlap of [ilo, ihi] with [w_lo, w_hi] modulo 2*pi
                    x = (ilo - w_lo) % two_pi
                    if x > (w_hi - w_lo) and x + (ihi - ilo) < two_pi:
                        continue
                if 2 * nv + 8 > lbuf:
                    overflow = True
                    break
                # clip ring to the wedge: two half-planes through the origin
                na = -math.sin(w_lo)
                nb = math.cos(w_lo)
                m = 0
                for i in range(v0, v1):
                    b1x[m] = verts[i, 0] - sx
                    b1y[m] = verts[i, 1] - sy
                    m += 1
                m = _clip_halfplane(b1x, b1y, m, na, nb, 0.0, b2x, b2y)
                if m < 3:
                    continue
                if 2 * m + 8 > lbuf:
                    overflow = True
                    break
                na = math.sin(w_hi)
                nb = -math.cos(w_hi)
                m = _clip_halfplane(b2x, b2y, m, na, nb, 0.0, b1x, b1y)
                if m < 3:
                    continue

                # vertex radius range of the wedge-clipped polygon
                minvr2 = 1.0e300
                maxvr2 = 0.0
                for i in range(m):
                    d2 = b1x[i] * b1x[i] + b1y[i] * b1y[i]
                    if d2 < minvr2:
                        minvr2 = d2
                    if d2 > maxvr2:
                        maxvr2 = d2
                full_area = _signed_area(b1x, b1y, m)

                prev = 0.0
                for j in range(1, n_rad + 1):
                    r = r_edges[j]
                    rin = r * cos_half
                    if maxvr2 <= rin * rin:
                        aj = full_area  # entirely inside the chord polygon
                    elif minvr2 >= r * r and min_edge2 >= r * r:
                        aj = 0.0  # entirely outside the disk
                    else:
                        for i in range(m):
                            b3x[i] = b1x[i]
                            b3y[i] = b1y[i]
                        aj = _pie_clip_area(
                            b3x, b3y, m, chord_cos, chord_sin, a, n_chords, r,
                            b2x, b2y, lbuf,
                        )
                        if math.isnan(aj):
                            overflow = True
                            break
                    areas[a, j - 1] += aj - prev
                    prev = aj
                if overflow:
                    break
            if overflow:
                break

        if overflow:
            flags[q] = 1
            for a in range(n_ang):
                for j in range(n_rad):
                    out[q, a, j] = 0.0
            continue
        flags[q] = 0
        for a in range(n_ang):
            for j in range(n_rad):
                v = areas[a, j] / bin_area[j]
                if v < 0.0:
                    v = 0.0
                elif v > 1.0:
                    v = 1.0
                out[q, a, j] = v


def _assemble_outer_bins_impl(samples, hists, mu, sigma2, weight_floor, out, fallback):
    n_out = mu.shape[0]
    n_samples = samples.shape[0]
    n_in = hists.shape[1]
    for k in range(n_out):
        mx = mu[k, 0]
        my = mu[k, 1]
        inv = 1.0 / (2.0 * sigma2[k])
        wsum = 0.0
        for b in range(n_in):
            out[k, b] = 0.0
        for q in range(n_samples):
            dx = samples[q, 0] - mx
            dy = samples[q, 1] - my
            w = math.exp(-(dx * dx + dy * dy) * inv)
            wsum += w
            for b in range(n_in):
                out[k, b] += w * hists[q, b]
        if wsum < weight_floor:
            best = 0
            bestd = 1.0e300
            for q in range(n_samples):
                dx = samples[q, 0] - mx
                dy = samples[q, 1] - my
                d2 = dx * dx + dy * dy
                if d2 < bestd:
                    bestd = d2
                    best = q
            for b in range(n_in):
                out[k, b] = hists[best, b]
            fallback[k] = 1
        else:
            for b in range(n_in):
                out[k, b] /= wsum
            fallback[k] = 0


def _l1_scan_impl(mat, query, out):
    n = mat.shape[0]
    d = mat.shape[1]
    for i in range(n):
        s = 0.0
        for j in range(d):
            s += abs(mat[i, j] - query[j])
        out[i] = s


# The numba path needs every helper compiled as well; rebinding the module
# globals lets the jitted drivers resolve them at compile time. With the
# numpy backend _jit is the identity and everything stays interpreted.
_clip_halfplane = _jit(_clip_halfplane)
_signed_area = _jit(_signed_area)
_ring_stats = _jit(_ring_stats)
_pie_clip_area = _jit(_pie_clip_area)

_point_histograms_py = _point_histograms_impl
_assemble_outer_bins_py = _assemble_outer_bins_impl
_l1_scan_py = _l1_scan_impl

_point_histograms_fn = _jit(_point_histograms_impl)
_assemble_outer_bins_fn = _jit(_assemble_outer_bins_impl)
_l1_scan_fn = _jit(_l1_scan_impl)


# ---------------------------------------------------------------------------
# numpy-vectorized variants (fallback backend for the array-friendly kernels)
# ---------------------------------------------------------------------------

def assemble_outer_bins_numpy(samples, hists, mu, sigma2, weight_floor):
    """Vectorized Gaussian-weighted aggregation of point histograms."""
    d2 = ((samples[None, :, :] - mu[:, None, :]) ** 2).sum(axis=2)  # (K, N)
    w = np.exp(-d2 / (2.0 * sigma2[:, None]))
    wsum = w.sum(axis=1)
    fallback = wsum < weight_floor
    safe = np.where(fallback, 1.0, wsum)
    out = (w @ hists) / safe[:, None]
    if fallback.any():
        nearest = np.argmin(d2, axis=1)
        out[fallback] = hists[nearest[fallback]]
    return out, fallback.astype(np.uint8)


def l1_scan_numpy(mat, query):
    """Vectorized L1 distances of every row of ``mat`` to ``query``."""
    return np.abs(mat - query[None, :]).sum(axis=1, dtype=np.float64)


# ---------------------------------------------------------------------------
# public wrappers
# ---------------------------------------------------------------------------

def point_histograms(samples, pack, tables, raw=False):
    """Point histograms for a batch of sample points against one target region.

    ``samples`` is (N, 2) float64, ``pack`` a PolygonSet.kernel_pack(), and
    ``tables`` a PolarBinTables. Returns (hists (N, n_ang, n_rad), flags (N,));
    flagged rows overflowed the clip buffers and must be recomputed by the
    caller through the reference path (not expected in practice).
    With ``raw=True`` the interpreted kernel runs regardless of backend.
    """
    samples = np.ascontiguousarray(samples, dtype=np.float64)
    verts, ring_off, ring_bbox, ring_sign = pack
    out = np.empty((samples.shape[0], tables.n_ang, tables.n_rad), dtype=np.float64)
    flags = np.zeros(samples.shape[0], dtype=np.uint8)
    if samples.shape[0] == 0:
        return out, flags
    if verts.shape[0] == 0:
        out[:] = 0.0
        return out, flags
    fn = _point_histograms_py if raw else _point_histograms_fn
    fn(
        samples,
        verts,
        ring_off,
        ring_bbox,
        ring_sign,
        tables.wedge_edges,
        tables.chord_cos,
        tables.chord_sin,
        tables.r_edges,
        tables.pie_area,
        tables.bin_area,
        tables.chord_cos_half,
        out,
        flags,
    )
    return out, flags


def assemble_outer_bins(samples, hists, mu, sigma2, weight_floor):
    """Gaussian-weighted average of point histograms per outer bin.

    Returns (out (K, B), fallback (K,) uint8) where fallback marks bins whose
    total Gaussian weight underflowed ``weight_floor`` and which were assigned
    the histogram of the sample nearest to the bin centroid.
    """
    samples = np.ascontiguousarray(samples, dtype=np.float64)
    hists = np.ascontiguousarray(hists, dtype=np.float64)
    if BACKEND == "numpy":
        return assemble_outer_bins_numpy(samples, hists, mu, sigma2, weight_floor)
    out = np.empty((mu.shape[0], hists.shape[1]), dtype=np.float64)
    fallback = np.zeros(mu.shape[0], dtype=np.uint8)
    _assemble_outer_bins_fn(samples, hists, mu, sigma2, weight_floor, out, fallback)
    return out, fallback


def l1_scan(mat, query):
    """L1 distance from ``query`` to every row of ``mat`` (float64 result)."""
    if BACKEND == "numpy":
        return l1_scan_numpy(mat, query)
    out = np.empty(mat.shape[0], dtype=np.float64)
    _l1_scan_fn(mat, query, out)
    return out


def warmup():
    """Trigger JIT compilation of all kernels on tiny inputs."""
    tables = polar_bin_tables(4, 2, 1.0, 8)
    square = np.array([[-2.0, -2.0], [2.0, -2.0], [2.0, 2.0], [-2.0, 2.0]])
    pack = (
        square,
        np.array([0, 4], dtype=np.int64),
        np.array([[-2.0, -2.0, 2.0, 2.0]]),
        np.array([1.0]),
    )
    pts = np.zeros((1, 2))
    hists, _ = point_histograms(pts, pack, tables)
    assemble_outer_bins(pts, hists.reshape(1, -1), np.zeros((2, 2)), np.ones(2), 1e-12)
    l1_scan(np.zeros((2, 4), dtype=np.float32), np.zeros(4, dtype=np.float32))
