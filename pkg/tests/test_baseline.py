import numpy as np
import pytest

from raid.baseline import shape_context
from raid.descriptor import DescriptorConfig, compute_r_max, point_histogram
from raid.errors import EmptyRelationshipError
from raid.geometry import PolygonSet, centroid

from oracles import mc_point_histogram

CFG = DescriptorConfig()


def square(x0, y0, side):
    return [(x0, y0), (x0 + side, y0), (x0 + side, y0 + side), (x0, y0 + side)]


def test_baseline_is_normalized_centroid_histogram():
    src = PolygonSet.from_rings([square(0, 0, 10)])
    tgt = PolygonSet.from_rings([square(8, 2, 10)])
    b = shape_context(src, tgt, CFG)
    assert b.flat.shape == (16,)
    assert b.flat.sum() == pytest.approx(1.0, abs=1e-9)
    h = point_histogram(centroid(src), tgt, compute_r_max(src), CFG).bins
    assert np.allclose(b.bins, h / h.sum())
    assert b.r_max == pytest.approx(compute_r_max(src))


def test_baseline_empty_target_rejected():
    src = PolygonSet.from_rings([square(0, 0, 10)])
    with pytest.raises(EmptyRelationshipError):
        shape_context(src, PolygonSet.empty(), CFG)
    far = PolygonSet.from_rings([square(100, 100, 2)])
    with pytest.raises(EmptyRelationshipError):
        shape_context(src, far, CFG)


def test_baseline_half_plane_monte_carlo():
    # centroid at (5, 5); everything right of x=5 is target
    src = PolygonSet.from_rings([square(0, 0, 10)])
    tgt = PolygonSet.from_rings([[(5, -100), (200, -100), (200, 100), (5, 100)]])
    b = shape_context(src, tgt, CFG)
    # mass concentrated in right-pointing bins
    right = b.bins[[7, 0, 1], :].sum()
    left = b.bins[[3, 4, 5], :].sum()
    assert right > 0.6
    assert left < 1e-9
    rng = np.random.default_rng(77)
    r_max = compute_r_max(src)
    p_hat, se = mc_point_histogram((5.0, 5.0), tgt, r_max, CFG, 100_000, rng)
    # estimator noise also moves the normalizer; compare unnormalized bins
    h = point_histogram((5.0, 5.0), tgt, r_max, CFG).bins
    assert (np.abs(h - p_hat) <= 3 * se + 1e-12).all()


def test_baseline_matches_raid_for_point_like_source():
    # a tiny source: every outer bin of the full descriptor collapses to the
    # centroid histogram, so the baseline equals each normalized outer slice
    from raid.descriptor import raid

    src = PolygonSet.from_rings([square(50, 50, 1)])
    tgt = PolygonSet.from_rings([square(50.8, 49.9, 2)])
    cfg = DescriptorConfig(sample_count_target=10000)
    b = shape_context(src, tgt, cfg)
    d = raid(src, tgt, cfg, image_area=10000.0)
    outer_mass = d.bins.sum(axis=(0, 1))
    k, l = np.unravel_index(np.argmax(outer_mass), outer_mass.shape)
    slice_norm = d.bins[:, :, k, l] / outer_mass[k, l]
    assert np.abs(slice_norm - b.bins).max() < 0.05
