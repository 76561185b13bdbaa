"""2-D polygon primitives: areas, centroids, boolean intersection, annular-sector
polygons, and regular-grid sampling inside regions.

All values are immutable after construction and every operation is a pure
function, so everything here is safe to share across threads.

Robust boolean operations are delegated to shapely (GEOS); the descriptor hot
path has its own specialized clipping kernels in ``raid._kernels`` which are
cross-checked against this module in the test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import shapely
from shapely.geometry import GeometryCollection, MultiPolygon, Point, Polygon
from shapely.geometry.polygon import orient
from shapely.ops import nearest_points, unary_union
from shapely.validation import make_valid

from .errors import DegenerateRegionError, InvalidPolygonError

__all__ = [
    "PolygonSet",
    "AnnularSector",
    "area",
    "centroid",
    "sector_polygon",
    "intersection_area",
    "sample_grid",
    "arc_chord_count",
]


def _clean_ring(ring) -> np.ndarray:
    """Coerce a ring to an (N, 2) float64 array, dropping repeated vertices."""
    arr = np.asarray(ring, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise InvalidPolygonError(f"ring must be an (N, 2) point list, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidPolygonError("ring contains non-finite coordinates")
    # drop explicit closing vertex and consecutive duplicates
    if len(arr) > 1 and np.allclose(arr[0], arr[-1]):
        arr = arr[:-1]
    if len(arr) >= 2:
        keep = np.ones(len(arr), dtype=bool)
        keep[1:] = np.any(arr[1:] != arr[:-1], axis=1)
        arr = arr[keep]
    if len(arr) < 3:
        raise InvalidPolygonError(f"ring needs at least 3 distinct vertices, got {len(arr)}")
    return arr


def _as_multipolygon(geom) -> MultiPolygon:
    """Keep only the areal parts of a geometry."""
    if geom.is_empty:
        return MultiPolygon([])
    if isinstance(geom, Polygon):
        return MultiPolygon([geom])
    if isinstance(geom, MultiPolygon):
        return geom
    if isinstance(geom, GeometryCollection):
        polys = []
        for g in geom.geoms:
            polys.extend(_as_multipolygon(g).geoms)
        return MultiPolygon(polys)
    # lines / points carry no area
    return MultiPolygon([])


def _repair(geom) -> MultiPolygon:
    """Normalize an arbitrary areal geometry into a valid MultiPolygon.

    Self-intersecting rings come out with even-odd semantics (a bowtie becomes
    two triangles), matching how dirty annotation rings are interpreted.
    """
    if not geom.is_valid:
        geom = make_valid(geom)
    mp = _as_multipolygon(geom)
    if not mp.is_valid:
        mp = _as_multipolygon(mp.buffer(0))
    # canonical orientation: exteriors CCW, holes CW
    mp = MultiPolygon([orient(p, sign=1.0) for p in mp.geoms if p.area > 0.0])
    return mp


@dataclass(frozen=True)
class PolygonSet:
    """A polygonal region: outer rings plus holes, in math (y-up) coordinates.

    The canonical form is a valid shapely MultiPolygon with CCW exteriors and
    CW holes. Instances are immutable; derived views are cached.
    """

    geom: MultiPolygon
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @classmethod
    def empty(cls) -> "PolygonSet":
        return cls(MultiPolygon([]))

    @classmethod
    def from_shapely(cls, geom) -> "PolygonSet":
        return cls(_repair(geom))

    @classmethod
    def from_rings(cls, rings, holes=None) -> "PolygonSet":
        """Build a region from raw coordinate rings.

        ``holes`` is an optional bool flag per ring. Without flags the rings
        are unioned (COCO-style polygon lists); with flags the region is
        (union of outers) minus (union of holes). Dirty rings are repaired.
        """
        rings = [_clean_ring(r) for r in rings]
        if not rings:
            return cls.empty()
        if holes is None:
            parts = [_repair(Polygon(r)) for r in rings]
            merged = unary_union(parts)
            return cls(_repair(merged))
        if len(holes) != len(rings):
            raise InvalidPolygonError("hole flags must match ring count")
        outers = [_repair(Polygon(r)) for r, h in zip(rings, holes) if not h]
        inners = [_repair(Polygon(r)) for r, h in zip(rings, holes) if h]
        if not outers:
            raise InvalidPolygonError("polygon set needs at least one outer ring")
        region = unary_union(outers)
        if inners:
            region = region.difference(unary_union(inners))
        return cls(_repair(region))

    @property
    def is_empty(self) -> bool:
        return self.geom.is_empty or len(self.geom.geoms) == 0

    @property
    def area(self) -> float:
        return float(self.geom.area)

    @property
    def bounds(self):
        """(minx, miny, maxx, maxy); raises on empty regions."""
        if self.is_empty:
            raise DegenerateRegionError("empty polygon set has no bounds")
        return self.geom.bounds

    def rings(self):
        """All rings as (coords (N,2) float64 without closing vertex, is_hole)."""
        out = self._cache.get("rings")
        if out is None:
            out = []
            for poly in self.geom.geoms:
                out.append((np.asarray(poly.exterior.coords[:-1], dtype=np.float64), False))
                for hole in poly.interiors:
                    out.append((np.asarray(hole.coords[:-1], dtype=np.float64), True))
            self._cache["rings"] = out
        return out

    def kernel_pack(self):
        """Flattened ring arrays consumed by the clipping kernels.

        Returns (verts (V,2), ring_off (R+1,), ring_bbox (R,4), ring_sign (R,)).
        Exterior rings are CCW (sign +1) and holes CW (sign -1), so signed
        shoelace areas of clipped rings carry the hole sign automatically.
        """
        pack = self._cache.get("pack")
        if pack is None:
            rings = self.rings()
            if rings:
                verts = np.concatenate([r for r, _ in rings], axis=0)
                off = np.zeros(len(rings) + 1, dtype=np.int64)
                bbox = np.zeros((len(rings), 4), dtype=np.float64)
                sign = np.zeros(len(rings), dtype=np.float64)
                for i, (r, hole) in enumerate(rings):
                    off[i + 1] = off[i] + len(r)
                    bbox[i] = (r[:, 0].min(), r[:, 1].min(), r[:, 0].max(), r[:, 1].max())
                    sign[i] = -1.0 if hole else 1.0
            else:
                verts = np.zeros((0, 2), dtype=np.float64)
                off = np.zeros(1, dtype=np.int64)
                bbox = np.zeros((0, 4), dtype=np.float64)
                sign = np.zeros(0, dtype=np.float64)
            pack = (verts, off, bbox, sign)
            self._cache["pack"] = pack
        return pack

    def contains_points(self, xs, ys) -> np.ndarray:
        return shapely.contains_xy(self.geom, xs, ys)

    def translated(self, dx: float, dy: float) -> "PolygonSet":
        return PolygonSet(shapely.transform(self.geom, lambda c: c + np.array([dx, dy])))

    def scaled(self, factor: float, origin=(0.0, 0.0)) -> "PolygonSet":
        ox, oy = origin
        return PolygonSet(
            shapely.transform(self.geom, lambda c: (c - np.array([ox, oy])) * factor + np.array([ox, oy]))
        )


@dataclass(frozen=True)
class AnnularSector:
    """A polar bin: angular span [phi_lo, phi_hi], radial span [r_lo, r_hi]."""

    center: tuple
    phi_lo: float
    phi_hi: float
    r_lo: float
    r_hi: float

    def __post_init__(self):
        if not (0.0 <= self.r_lo < self.r_hi):
            raise InvalidPolygonError("annular sector needs 0 <= r_lo < r_hi")
        span = self.phi_hi - self.phi_lo
        if not (0.0 < span <= 2.0 * math.pi + 1e-12):
            raise InvalidPolygonError("annular sector span must be in (0, 2*pi]")

    @property
    def span(self) -> float:
        return self.phi_hi - self.phi_lo

    def analytic_area(self) -> float:
        return 0.5 * self.span * (self.r_hi**2 - self.r_lo**2)


def area(p: PolygonSet) -> float:
    """Total region area: outer-ring areas minus hole areas."""
    return p.area


def centroid(p: PolygonSet) -> np.ndarray:
    """Area-weighted centroid. Raises DegenerateRegionError for zero area."""
    if p.is_empty or p.area <= 0.0:
        raise DegenerateRegionError("centroid of a zero-area region is undefined")
    c = p.geom.centroid
    return np.array([c.x, c.y], dtype=np.float64)


def arc_chord_count(span: float, arc_segments: int) -> int:
    """Chords used to tessellate an arc of ``span`` radians."""
    if arc_segments < 4:
        raise InvalidPolygonError("arc_segments must be >= 4")
    return max(1, int(math.ceil(arc_segments * span / (2.0 * math.pi) - 1e-9)))


def _arc_points(cx, cy, r, phi_lo, phi_hi, n):
    span = phi_hi - phi_lo
    pts = np.empty((n + 1, 2), dtype=np.float64)
    for m in range(n + 1):
        a = phi_lo + span * m / n
        pts[m, 0] = cx + r * math.cos(a)
        pts[m, 1] = cy + r * math.sin(a)
    return pts


def sector_polygon(s: AnnularSector, arc_segments: int = 64) -> PolygonSet:
    """Polygonal approximation of an annular sector.

    Arcs are tessellated with ``arc_segments`` chords per full circle; chord
    endpoints sit exactly on the bounding circles, so the polygon area is
    slightly below the analytic sector area and converges as O(1/segments^2).
    """
    cx, cy = s.center
    n = arc_chord_count(s.span, arc_segments)
    full_circle = abs(s.span - 2.0 * math.pi) < 1e-9
    if full_circle:
        outer = _arc_points(cx, cy, s.r_hi, s.phi_lo, s.phi_hi, max(n, 3))[:-1]
        if s.r_lo > 0.0:
            inner = _arc_points(cx, cy, s.r_lo, s.phi_lo, s.phi_hi, max(n, 3))[:-1]
            return PolygonSet.from_rings([outer, inner], holes=[False, True])
        return PolygonSet.from_rings([outer])
    outer = _arc_points(cx, cy, s.r_hi, s.phi_lo, s.phi_hi, n)
    if s.r_lo > 0.0:
        inner = _arc_points(cx, cy, s.r_lo, s.phi_lo, s.phi_hi, n)[::-1]
        ring = np.concatenate([outer, inner], axis=0)
    else:
        ring = np.concatenate([outer, np.array([[cx, cy]])], axis=0)
    return PolygonSet.from_rings([ring])


def intersection_area(a: PolygonSet, b: PolygonSet) -> float:
    """Area of the boolean intersection of two regions."""
    if a.is_empty or b.is_empty:
        return 0.0
    return float(a.geom.intersection(b.geom).area)


def sample_grid(region: PolygonSet, spacing: float) -> np.ndarray:
    """Cell-center points of the image-origin-anchored grid inside ``region``.

    The lattice has pitch ``spacing`` with points at ((m+0.5)*spacing,
    (n+0.5)*spacing), shared by every region of an image, so point histograms
    can be cached per image. If no lattice point lies inside, the single point
    of the region closest to its centroid is returned instead.
    """
    if spacing <= 0.0:
        raise InvalidPolygonError("grid spacing must be positive")
    if region.is_empty:
        return np.zeros((0, 2), dtype=np.float64)
    minx, miny, maxx, maxy = region.bounds
    m_lo = int(math.ceil(minx / spacing - 0.5))
    m_hi = int(math.floor(maxx / spacing - 0.5))
    n_lo = int(math.ceil(miny / spacing - 0.5))
    n_hi = int(math.floor(maxy / spacing - 0.5))
    if m_hi >= m_lo and n_hi >= n_lo:
        xs = (np.arange(m_lo, m_hi + 1, dtype=np.float64) + 0.5) * spacing
        ys = (np.arange(n_lo, n_hi + 1, dtype=np.float64) + 0.5) * spacing
        gx, gy = np.meshgrid(xs, ys)
        gx = gx.ravel()
        gy = gy.ravel()
        inside = region.contains_points(gx, gy)
        if inside.any():
            return np.column_stack([gx[inside], gy[inside]])
    # region smaller than one cell: fall back to its point nearest the centroid
    c = region.geom.centroid
    p = nearest_points(region.geom, Point(c.x, c.y))[0]
    return np.array([[p.x, p.y]], dtype=np.float64)


def clip_to_rect(p: PolygonSet, width: float, height: float) -> PolygonSet:
    """Clip a region to the image rectangle [0, width] x [0, height]."""
    if p.is_empty:
        return p
    rect = Polygon([(0, 0), (width, 0), (width, height), (0, height)])
    return PolygonSet.from_shapely(p.geom.intersection(rect))
