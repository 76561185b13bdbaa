import math

import numpy as np
import pytest

from raid import _kernels
from raid.descriptor import DescriptorConfig, point_histogram_reference
from raid.geometry import PolygonSet

from oracles import random_star_polygon

CFG = DescriptorConfig()


def tables_for(r_max, cfg=CFG):
    return _kernels.polar_bin_tables(
        cfg.angular_bins_point, cfg.radial_bins_point, r_max, cfg.arc_segments
    )


def test_polar_bin_tables_layout():
    t = tables_for(2.0)
    assert t.wedge_edges[0] == pytest.approx(-math.pi / 8)
    assert t.wedge_edges[-1] == pytest.approx(2 * math.pi - math.pi / 8)
    assert np.allclose(np.diff(t.wedge_edges), math.pi / 4)
    assert np.allclose(t.r_edges, [0.0, 1.0, 2.0])
    # pie areas approximate the analytic wedge area to the chord deficit
    exact = 0.5 * (math.pi / 4) * t.r_edges**2
    assert np.allclose(t.pie_area, exact, rtol=0.003)
    assert np.allclose(t.bin_area, np.diff(t.pie_area))


def test_kernel_matches_reference_on_random_scenes():
    rng = np.random.default_rng(7)
    worst = 0.0
    for trial in range(40):
        rings = [random_star_polygon(rng)]
        flags_in = [False]
        if trial % 3 == 0:
            hc = np.mean(rings[0], axis=0)
            rings.append(
                [
                    (hc[0] + 0.3 * math.cos(a), hc[1] + 0.3 * math.sin(a))
                    for a in np.linspace(0, 2 * math.pi, 6, endpoint=False)
                ]
            )
            flags_in.append(True)
        tgt = PolygonSet.from_rings(rings, holes=flags_in)
        if tgt.is_empty:
            continue
        r_max = rng.uniform(0.5, 5.0)
        center = tuple(rng.uniform(-3, 3, size=2))
        t = tables_for(r_max)
        pts = np.array([center])
        hists, oflags = _kernels.point_histograms(pts, tgt.kernel_pack(), t)
        assert not oflags.any()
        ref = point_histogram_reference(center, tgt, r_max, CFG)
        worst = max(worst, float(np.abs(hists[0] - ref).max()))
    assert worst < 1e-9


def test_kernel_jit_matches_interpreted():
    rng = np.random.default_rng(11)
    tgt = PolygonSet.from_rings([random_star_polygon(rng)])
    pts = rng.uniform(-4, 4, size=(50, 2))
    t = tables_for(2.5)
    a, fa = _kernels.point_histograms(pts, tgt.kernel_pack(), t)
    b, fb = _kernels.point_histograms(pts, tgt.kernel_pack(), t, raw=True)
    assert (fa == fb).all()
    assert np.array_equal(a, b)


def test_full_coverage_is_exactly_one():
    tgt = PolygonSet.from_rings([[(-50, -50), (50, -50), (50, 50), (-50, 50)]])
    t = tables_for(3.0)
    hists, _ = _kernels.point_histograms(np.zeros((1, 2)), tgt.kernel_pack(), t)
    assert (hists == 1.0).all()


def test_empty_target_all_zero():
    t = tables_for(1.0)
    hists, flags = _kernels.point_histograms(
        np.zeros((3, 2)), PolygonSet.empty().kernel_pack(), t
    )
    assert (hists == 0.0).all()
    assert not flags.any()


def test_far_target_all_zero():
    tgt = PolygonSet.from_rings([[(100, 100), (101, 100), (101, 101), (100, 101)]])
    t = tables_for(1.0)
    hists, _ = _kernels.point_histograms(np.zeros((1, 2)), tgt.kernel_pack(), t)
    assert (hists == 0.0).all()


def test_half_plane_right_bins():
    # big box covering x > 0: bins pointing right full, pointing left empty
    tgt = PolygonSet.from_rings([[(0, -100), (100, -100), (100, 100), (0, 100)]])
    t = tables_for(2.0)
    hists, _ = _kernels.point_histograms(np.zeros((1, 2)), tgt.kernel_pack(), t)
    h = hists[0]
    assert h[0].min() > 0.99  # bin 0 straddles +x, fully covered? no: centered
    assert h[4].max() < 0.01  # bin 4 centered on -x
    # bins 2 and 6 straddle the boundary half and half
    assert h[2] == pytest.approx(0.5, abs=0.02)
    assert h[6] == pytest.approx(0.5, abs=0.02)


def test_assemble_matches_numpy_variant():
    rng = np.random.default_rng(3)
    samples = rng.uniform(-2, 2, size=(40, 2))
    hists = rng.uniform(0, 1, size=(40, 16))
    mu = rng.uniform(-2, 2, size=(16, 2))
    sigma2 = rng.uniform(0.05, 1.0, size=16)
    out_a, fb_a = _kernels.assemble_outer_bins(samples, hists, mu, sigma2, 1e-12)
    out_b, fb_b = _kernels.assemble_outer_bins_numpy(samples, hists, mu, sigma2, 1e-12)
    assert np.allclose(out_a, out_b, atol=1e-12)
    assert (fb_a == fb_b).all()
    assert not fb_a.any()


def test_assemble_fallback_nearest_sample():
    samples = np.array([[0.0, 0.0], [10.0, 0.0]])
    hists = np.array([[1.0, 0.0], [0.0, 1.0]])
    mu = np.array([[9.0, 0.0]])
    sigma2 = np.array([1e-6])  # weights underflow for both samples
    out, fb = _kernels.assemble_outer_bins(samples, hists, mu, sigma2, 1e-12)
    assert fb[0] == 1
    assert np.array_equal(out[0], hists[1])  # nearest sample wins
    out2, fb2 = _kernels.assemble_outer_bins_numpy(samples, hists, mu, sigma2, 1e-12)
    assert fb2[0] == 1
    assert np.array_equal(out2[0], hists[1])


def test_l1_scan_variants_agree():
    rng = np.random.default_rng(9)
    mat = rng.uniform(0, 1, size=(200, 256)).astype(np.float32)
    q = rng.uniform(0, 1, size=256).astype(np.float32)
    a = _kernels.l1_scan(mat, q)
    b = _kernels.l1_scan_numpy(mat, q)
    assert a.dtype == np.float64
    assert np.allclose(a, b, atol=1e-6)
    brute = np.abs(mat.astype(np.float64) - q.astype(np.float64)).sum(axis=1)
    assert np.allclose(a, brute, atol=1e-5)


def test_point_histogram_bins_within_unit_interval():
    rng = np.random.default_rng(21)
    for _ in range(10):
        tgt = PolygonSet.from_rings([random_star_polygon(rng)])
        pts = rng.uniform(-3, 3, size=(20, 2))
        t = tables_for(rng.uniform(0.5, 4.0))
        hists, _ = _kernels.point_histograms(pts, tgt.kernel_pack(), t)
        assert hists.min() >= 0.0
        assert hists.max() <= 1.0
