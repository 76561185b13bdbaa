"""Polar relationship descriptor between two image regions.

The descriptor records, for a source and a target region, how the target is
distributed around the source. A polar grid of angular times radial bins is
centered on every sample point of the source; each cell of that grid stores
the fraction of its area covered by the target (a point histogram). The
per-sample histograms are then aggregated into a second polar grid centered
on the source centroid, with each outer bin taking a Gaussian-weighted
average of all sample histograms, weighted by distance between the sample
and the bin centroid. The result is a 4-D tensor indexed by (point angular,
point radial, outer angular, outer radial), normalized to sum 1 and
flattened in that index order for indexing and search (256 values with the
default 8/2/8/2 split).

Both polar grids always reach to ``r_max``, the distance from the source
centroid to its farthest vertex, which makes descriptors invariant to scale
and translation but deliberately sensitive to rotation.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from typing import Hashable, Optional

import numpy as np
from numpy.typing import NDArray

from . import _kernels
from .errors import (
    ConfigMismatchError,
    DegenerateRegionError,
    EmptyRelationshipError,
    InvalidPolygonError,
)
from .geometry import (
    AnnularSector,
    PolygonSet,
    centroid,
    intersection_area,
    sample_grid,
    sector_polygon,
)


@dataclass(frozen=True)
class DescriptorConfig:
    """Bin geometry and sampling parameters.

    The point level is the histogram around each sample; the outer level is
    the grid of Gaussian aggregation bins over the source. Both default to
    8 angular x 2 radial. ``sample_count_target`` fixes the grid pitch as
    sqrt(image_area / sample_count_target), so the expected number of sample
    points per image is roughly that constant, independent of resolution.
    """

    angular_bins_point: int = 8
    radial_bins_point: int = 2
    angular_bins_outer: int = 8
    radial_bins_outer: int = 2
    sample_count_target: int = 10000
    arc_segments: int = 64
    weight_floor: float = 1e-12

    def __post_init__(self) -> None:
        counts = (
            self.angular_bins_point,
            self.radial_bins_point,
            self.angular_bins_outer,
            self.radial_bins_outer,
        )
        if any(c < 1 for c in counts):
            raise ConfigMismatchError("bin counts must be at least 1")
        if self.sample_count_target <= 0:
            raise ConfigMismatchError("sample_count_target must be positive")
        if self.arc_segments < 4:
            raise ConfigMismatchError("arc_segments must be at least 4")
        if self.weight_floor <= 0:
            raise ConfigMismatchError("weight_floor must be positive")

    @property
    def n_bins(self) -> int:
        return (
            self.angular_bins_point
            * self.radial_bins_point
            * self.angular_bins_outer
            * self.radial_bins_outer
        )

    def to_dict(self) -> dict:
        return {
            "angular_bins_point": self.angular_bins_point,
            "radial_bins_point": self.radial_bins_point,
            "angular_bins_outer": self.angular_bins_outer,
            "radial_bins_outer": self.radial_bins_outer,
            "sample_count_target": self.sample_count_target,
            "arc_segments": self.arc_segments,
            "weight_floor": self.weight_floor,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DescriptorConfig":
        known = {
            "angular_bins_point",
            "radial_bins_point",
            "angular_bins_outer",
            "radial_bins_outer",
            "sample_count_target",
            "arc_segments",
            "weight_floor",
        }
        extra = set(d) - known
        if extra:
            raise ConfigMismatchError(f"unknown config keys: {sorted(extra)}")
        return cls(**d)


@dataclass(frozen=True)
class PointHistogram:
    """Coverage fractions of the polar bins around a single point.

    ``bins[i, j]`` is the fraction of the bin at angular index i, radial
    index j covered by the target. Angular bin 0 is centered on the +x axis
    and bins advance counterclockwise; radial bin edges sit at equal steps
    up to ``r_max``.
    """

    bins: NDArray[np.float64]
    origin: tuple[float, float]
    r_max: float


@dataclass(frozen=True)
class RaidDescriptor:
    """Aggregated relationship descriptor, normalized to sum 1.

    ``bins[i, j, k, l]`` is the point-histogram value (i angular, j radial)
    aggregated over the outer bin (k angular, l radial); flattening is
    C-order, i varying slowest. ``fallback_bins`` lists outer (k, l) bins
    whose Gaussian weights underflowed and which carry the histogram of the
    nearest sample instead.
    """

    bins: NDArray[np.float64]
    r_max: float
    config: DescriptorConfig = field(default_factory=DescriptorConfig)
    fallback_bins: tuple[tuple[int, int], ...] = ()

    @property
    def flat(self) -> NDArray[np.float64]:
        return self.bins.reshape(-1)


def compute_r_max(source: PolygonSet) -> float:
    """Distance from the source centroid to its farthest vertex."""
    c = centroid(source)
    verts = source.kernel_pack()[0]
    if verts.shape[0] == 0:
        raise DegenerateRegionError("region has no vertices")
    d = np.hypot(verts[:, 0] - c[0], verts[:, 1] - c[1])
    r = float(d.max())
    if r <= 0.0:
        raise DegenerateRegionError("region has zero extent")
    return r


def point_histogram_reference(
    origin: tuple[float, float],
    target: PolygonSet,
    r_max: float,
    config: DescriptorConfig = DescriptorConfig(),
) -> NDArray[np.float64]:
    """Point histogram through explicit sector polygons and boolean overlay.

    Slow but direct: each bin value is intersection_area(sector, target)
    divided by the sector polygon's own area. The fast clipping kernel must
    agree with this to rounding error; it also serves as the recovery path
    for the rare inputs the kernel flags.
    """
    if r_max <= 0.0:
        raise DegenerateRegionError("r_max must be positive")
    tables = _kernels.polar_bin_tables(
        config.angular_bins_point, config.radial_bins_point, r_max, config.arc_segments
    )
    out = np.zeros((config.angular_bins_point, config.radial_bins_point), dtype=np.float64)
    if target.is_empty:
        return out
    for i in range(config.angular_bins_point):
        for j in range(config.radial_bins_point):
            sec = AnnularSector(
                center=origin,
                phi_lo=float(tables.wedge_edges[i]),
                phi_hi=float(tables.wedge_edges[i + 1]),
                r_lo=float(tables.r_edges[j]),
                r_hi=float(tables.r_edges[j + 1]),
            )
            poly = sector_polygon(sec, config.arc_segments)
            out[i, j] = intersection_area(poly, target) / poly.area
    return np.clip(out, 0.0, 1.0)


def point_histogram(
    origin: tuple[float, float],
    target: PolygonSet,
    r_max: float,
    config: DescriptorConfig = DescriptorConfig(),
) -> PointHistogram:
    """Point histogram of ``target`` around ``origin`` at scale ``r_max``."""
    if r_max <= 0.0:
        raise DegenerateRegionError("r_max must be positive")
    tables = _kernels.polar_bin_tables(
        config.angular_bins_point, config.radial_bins_point, r_max, config.arc_segments
    )
    pts = np.array([[origin[0], origin[1]]], dtype=np.float64)
    hists, flags = _kernels.point_histograms(pts, target.kernel_pack(), tables)
    if flags[0]:
        values = point_histogram_reference(origin, target, r_max, config)
    else:
        values = hists[0]
    return PointHistogram(
        bins=values, origin=(float(origin[0]), float(origin[1])), r_max=r_max
    )


def outer_bin_layout(
    center: tuple[float, float],
    r_max: float,
    config: DescriptorConfig,
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Centroids and Gaussian variances of the outer bins, in (k, l) C-order.

    Each bin's centroid is the analytic area centroid of its annular sector;
    its variance is bin_area / (2*pi), which makes a unit-height Gaussian
    integrate to exactly the bin area.
    """
    n_ang = config.angular_bins_outer
    n_rad = config.radial_bins_outer
    mu = np.empty((n_ang * n_rad, 2), dtype=np.float64)
    sigma2 = np.empty(n_ang * n_rad, dtype=np.float64)
    span = 2.0 * math.pi / n_ang
    half = span / 2.0
    sinc = math.sin(half) / half
    for k in range(n_ang):
        phi_c = k * span
        for l in range(n_rad):
            r_lo = r_max * l / n_rad
            r_hi = r_max * (l + 1) / n_rad
            rad = (2.0 / 3.0) * sinc * (r_hi**3 - r_lo**3) / (r_hi**2 - r_lo**2)
            row = k * n_rad + l
            mu[row, 0] = center[0] + rad * math.cos(phi_c)
            mu[row, 1] = center[1] + rad * math.sin(phi_c)
            area = half * (r_hi**2 - r_lo**2)
            sigma2[row] = area / (2.0 * math.pi)
    return mu, sigma2


class PointHistogramCache:
    """Thread-safe memo of point histograms, shared across one image.

    Sample points lie on a lattice shared by all regions of an image, and
    the bin geometry is fixed by (target, r_max), so histograms computed for
    one source can be reused by any other source with the same r_max whose
    samples land on the same lattice points.
    """

    def __init__(self) -> None:
        self._data: dict = {}
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def fetch(
        self, target_key: Hashable, r_max: float, pts: NDArray[np.float64]
    ) -> tuple[list, list[int]]:
        """Look up each point; returns (row-or-None list, missing indices)."""
        rows: list = []
        missing: list[int] = []
        with self._lock:
            for q in range(pts.shape[0]):
                key = (target_key, r_max, float(pts[q, 0]), float(pts[q, 1]))
                row = self._data.get(key)
                if row is None:
                    missing.append(q)
                    self.misses += 1
                else:
                    self.hits += 1
                rows.append(row)
        return rows, missing

    def store(
        self,
        target_key: Hashable,
        r_max: float,
        pts: NDArray[np.float64],
        indices: list[int],
        hists: NDArray[np.float64],
    ) -> None:
        with self._lock:
            for q, row in zip(indices, hists):
                key = (target_key, r_max, float(pts[q, 0]), float(pts[q, 1]))
                self._data.setdefault(key, row)

    def __len__(self) -> int:
        return len(self._data)


def _sample_histograms(
    pts: NDArray[np.float64],
    target: PolygonSet,
    r_max: float,
    config: DescriptorConfig,
    cache: Optional[PointHistogramCache],
    target_key: Optional[Hashable],
) -> NDArray[np.float64]:
    """Point histograms for every sample point, flagged rows recomputed."""
    tables = _kernels.polar_bin_tables(
        config.angular_bins_point, config.radial_bins_point, r_max, config.arc_segments
    )
    pack = target.kernel_pack()

    def compute(sub: NDArray[np.float64]) -> NDArray[np.float64]:
        hists, flags = _kernels.point_histograms(sub, pack, tables)
        for q in np.nonzero(flags)[0]:
            hists[q] = point_histogram_reference(
                (sub[q, 0], sub[q, 1]), target, r_max, config
            )
        return hists

    if cache is None or target_key is None:
        return compute(pts)
    rows, missing = cache.fetch(target_key, r_max, pts)
    if missing:
        fresh = compute(pts[missing])
        cache.store(target_key, r_max, pts, missing, fresh)
        for q, row in zip(missing, fresh):
            rows[q] = row
    return np.stack(rows)


def raid(
    source: PolygonSet,
    target: PolygonSet,
    config: DescriptorConfig = DescriptorConfig(),
    image_area: Optional[float] = None,
    cache: Optional[PointHistogramCache] = None,
    target_key: Optional[Hashable] = None,
) -> RaidDescriptor:
    """Relationship descriptor of ``target`` as seen from ``source``.

    ``image_area`` sets the sample grid pitch; when omitted, the area of the
    joint bounding box of both regions stands in, which keeps the pitch (and
    the descriptor) invariant under scaling and translation of the pair.
    A ``cache`` plus ``target_key`` enables sharing of per-point histograms
    across sources of the same image.

    Raises EmptyRelationshipError if the target never intersects any sample
    point's polar range, i.e. the descriptor would be all zeros.
    """
    if source.is_empty:
        raise DegenerateRegionError("source region is empty")
    if image_area is None:
        bounds = [source.bounds]
        if not target.is_empty:
            bounds.append(target.bounds)
        b = np.array(bounds)
        minx, miny = b[:, 0].min(), b[:, 1].min()
        maxx, maxy = b[:, 2].max(), b[:, 3].max()
        image_area = (maxx - minx) * (maxy - miny)
    if image_area <= 0.0:
        raise InvalidPolygonError("image area must be positive")

    r_max = compute_r_max(source)
    spacing = math.sqrt(image_area / config.sample_count_target)
    pts = sample_grid(source, spacing)
    hists = _sample_histograms(pts, target, r_max, config, cache, target_key)
    n_point = config.angular_bins_point * config.radial_bins_point
    hists = hists.reshape(pts.shape[0], n_point)

    c = centroid(source)
    mu, sigma2 = outer_bin_layout(c, r_max, config)
    out, fb = _kernels.assemble_outer_bins(pts, hists, mu, sigma2, config.weight_floor)

    total = float(out.sum())
    if total <= 0.0:
        raise EmptyRelationshipError(
            "target does not intersect the polar range of any sample point"
        )
    # out is (outer bin, point bin); descriptor order puts point indices first
    bins = (out / total).reshape(
        config.angular_bins_outer,
        config.radial_bins_outer,
        config.angular_bins_point,
        config.radial_bins_point,
    )
    bins = np.ascontiguousarray(bins.transpose(2, 3, 0, 1))
    fallback = tuple(
        (int(r // config.radial_bins_outer), int(r % config.radial_bins_outer))
        for r in np.nonzero(fb)[0]
    )
    return RaidDescriptor(bins=bins, r_max=r_max, config=config, fallback_bins=fallback)


def l1_distance(a, b) -> float:
    """L1 distance between two descriptors (or flat descriptor arrays)."""
    va = a.flat if hasattr(a, "flat") and not isinstance(a, np.ndarray) else a
    vb = b.flat if hasattr(b, "flat") and not isinstance(b, np.ndarray) else b
    va = np.asarray(va, dtype=np.float64).reshape(-1)
    vb = np.asarray(vb, dtype=np.float64).reshape(-1)
    if va.shape != vb.shape:
        raise ConfigMismatchError(
            f"descriptor lengths differ: {va.shape[0]} vs {vb.shape[0]}"
        )
    return float(np.abs(va - vb).sum())
