"""Single-point baseline descriptor for comparison experiments.

Instead of aggregating histograms over every sample point of the source,
this baseline takes one polar histogram at the source centroid, using the
same bin geometry (r_max, angular and radial splits) as the full
descriptor, and normalizes it to sum 1. It captures where the target lies
relative to the source center but nothing about how that view changes
across the source, which is exactly the gap the full descriptor closes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from .descriptor import DescriptorConfig, compute_r_max, point_histogram
from .errors import EmptyRelationshipError
from .geometry import PolygonSet, centroid


@dataclass(frozen=True)
class BaselineDescriptor:
    """Normalized centroid histogram; bins[i, j] as in PointHistogram."""

    bins: NDArray[np.float64]
    r_max: float
    config: DescriptorConfig = field(default_factory=DescriptorConfig)

    @property
    def flat(self) -> NDArray[np.float64]:
        return self.bins.reshape(-1)


def shape_context(
    source: PolygonSet,
    target: PolygonSet,
    config: DescriptorConfig = DescriptorConfig(),
) -> BaselineDescriptor:
    """Centroid-anchored polar histogram of ``target``, normalized to sum 1.

    Raises EmptyRelationshipError when the target lies entirely outside the
    r_max disk around the source centroid, where the histogram has no mass.
    """
    r_max = compute_r_max(source)
    c = centroid(source)
    hist = point_histogram(c, target, r_max, config)
    total = float(hist.bins.sum())
    if total <= 0.0:
        raise EmptyRelationshipError(
            "target does not intersect the polar range of the source centroid"
        )
    return BaselineDescriptor(bins=hist.bins / total, r_max=r_max, config=config)
