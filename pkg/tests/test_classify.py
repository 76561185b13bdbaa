import json
import os

import numpy as np
import pytest

from raid.classify import (
    CLASS_NAMES,
    SYNTHETIC_CLASSES,
    ClassifierConfig,
    LabeledRelationship,
    generate_synthetic,
    knn_predict,
    loocv,
    relationships_from_dataset,
    render_report,
    synthetic_dataset,
)
from raid.baseline import shape_context
from raid.descriptor import compute_r_max, raid
from raid.errors import ConfigMismatchError, NotFoundError
from raid.geometry import centroid


def item(vec, classes=(), key=None):
    return LabeledRelationship(
        key=key or tuple(np.round(vec[:2], 3)),
        descriptor=np.asarray(vec, dtype=float),
        classes=frozenset(classes),
    )


def cluster(center, n, classes, rng, spread=0.01):
    base = np.zeros(8)
    base[center] = 1.0
    return [
        item(base + rng.normal(0, spread, 8), classes, key=(center, i))
        for i in range(n)
    ]


CFG2 = ClassifierConfig(class_list=("up", "down"))


def test_config_validation():
    with pytest.raises(ConfigMismatchError):
        ClassifierConfig(k=0)
    with pytest.raises(ConfigMismatchError):
        ClassifierConfig(threshold=1.5)
    with pytest.raises(ConfigMismatchError):
        ClassifierConfig(class_list=("a", "a"))
    with pytest.raises(ConfigMismatchError):
        ClassifierConfig(class_list=("a", "none"))


def test_knn_nearest_self():
    rng = np.random.default_rng(0)
    train = cluster(0, 4, ["up"], rng) + cluster(4, 4, ["down"], rng)
    cfg = ClassifierConfig(k=1, class_list=("up", "down"))
    assert knn_predict(train, train[5].descriptor, cfg) == {"down"}


def test_knn_unanimity_and_threshold():
    rng = np.random.default_rng(1)
    train = cluster(0, 5, ["bridging"], rng, spread=0.001)
    cfg = ClassifierConfig(k=5, threshold=0.5, class_list=("bridging",))
    q = np.zeros(8)
    q[0] = 1.0
    assert knn_predict(train, q, cfg) == {"bridging"}

    # 2 of 5 nearest carry the class: 0.4 < 0.5
    mixed = cluster(0, 2, ["bridging"], rng, 0.001) + cluster(0, 3, [], rng, 0.001)
    assert knn_predict(mixed, q, cfg) == set()
    low = ClassifierConfig(k=5, threshold=0.4, class_list=("bridging",))
    assert knn_predict(mixed, q, low) == {"bridging"}


def test_knn_errors():
    rng = np.random.default_rng(2)
    train = cluster(0, 3, ["up"], rng)
    with pytest.raises(ConfigMismatchError):
        knn_predict(train, train[0].descriptor, ClassifierConfig(k=5, class_list=("up",)))
    with pytest.raises(ConfigMismatchError):
        knn_predict([], np.zeros(8), CFG2)
    with pytest.raises(ConfigMismatchError):
        knn_predict(train, np.zeros(5), ClassifierConfig(k=1, class_list=("up",)))
    bad = train + [item(np.zeros(8), ["left"], key=("x",))]
    with pytest.raises(ConfigMismatchError):
        knn_predict(bad, np.zeros(8), ClassifierConfig(k=1, class_list=("up",)))


def test_knn_tie_break_stable_input_order():
    # four training points all at distance 1 from the query
    vecs = [np.eye(4)[i] for i in range(4)]
    classes = [["up"], ["up"], ["down"], ["down"]]
    train = [item(v, c, key=i) for i, (v, c) in enumerate(zip(vecs, classes))]
    q = np.zeros(4)
    cfg = ClassifierConfig(k=2, threshold=0.6, class_list=("up", "down"))
    # ties at the k-th distance resolve toward earlier items
    assert knn_predict(train, q, cfg) == {"up"}
    assert knn_predict(train[::-1], q, cfg) == {"down"}


def test_knn_permutation_invariant_without_ties():
    rng = np.random.default_rng(3)
    train = cluster(0, 6, ["up"], rng) + cluster(4, 6, ["down"], rng)
    q = rng.normal(0, 1, 8)
    cfg = ClassifierConfig(k=5, threshold=0.4, class_list=("up", "down"))
    expected = knn_predict(train, q, cfg)
    perm = rng.permutation(len(train))
    assert knn_predict([train[i] for i in perm], q, cfg) == expected


def test_knn_multilabel():
    rng = np.random.default_rng(4)
    train = cluster(0, 5, ["up", "left"], rng, 0.001)
    cfg = ClassifierConfig(k=5, class_list=("up", "down", "left"))
    q = np.zeros(8)
    q[0] = 1.0
    assert knn_predict(train, q, cfg) == {"up", "left"}


def separable_data(rng, per_class=12):
    data = []
    for c, name in enumerate(["up", "down", "left"]):
        base = np.zeros(8)
        base[c] = 1.0  # clusters pairwise L1 at least 2 apart, spread ~0.01
        for i in range(per_class):
            data.append(item(base + rng.normal(0, 0.002, 8), [name], key=(c, i)))
    return data


def test_loocv_separable_clusters_perfect_f1():
    rng = np.random.default_rng(5)
    data = separable_data(rng)
    cfg = ClassifierConfig(class_list=("up", "down", "left"))
    report = loocv(data, cfg)
    for c in cfg.class_list:
        assert report.per_class[c].f1 == 1.0
    assert report.macro_f1 == 1.0
    assert report.micro_f1 == 1.0
    assert len(report.sweep) == 9
    assert report.confusion_labels == ("up", "down", "left", "none")


def test_loocv_too_small():
    rng = np.random.default_rng(6)
    data = separable_data(rng, per_class=2)[:5]
    with pytest.raises(ConfigMismatchError):
        loocv(data, ClassifierConfig(k=5, class_list=("up", "down", "left")))


def test_loocv_row_sums_equal_class_counts():
    rng = np.random.default_rng(7)
    data = separable_data(rng)
    # make some items multi-label and some empty to stress the bookkeeping
    data[0] = LabeledRelationship(data[0].key, data[0].descriptor, frozenset({"up", "down"}))
    data[1] = LabeledRelationship(data[1].key, data[1].descriptor, frozenset())
    data[2] = LabeledRelationship(data[2].key, data[2].descriptor, frozenset())
    cfg = ClassifierConfig(class_list=("up", "down", "left"))
    report = loocv(data, cfg)
    sums = report.confusion.sum(axis=1)
    for j, c in enumerate(cfg.class_list):
        actual = sum(1 for it in data if c in it.classes)
        assert sums[j] == pytest.approx(actual)
    none_actual = sum(1 for it in data if not it.classes)
    assert sums[-1] == pytest.approx(none_actual)
    assert report.confusion.sum() == pytest.approx(
        sum(max(1, len(it.classes)) for it in data)
    )


def test_loocv_permutation_null_matches_prior():
    rng = np.random.default_rng(8)
    data = separable_data(rng, per_class=15)
    cfg = ClassifierConfig(class_list=("up", "down", "left"))
    prior = 1.0 / 3.0
    scores = []
    class_sets = [it.classes for it in data]
    for _ in range(20):
        perm = rng.permutation(len(data))
        shuffled = [
            LabeledRelationship(it.key, it.descriptor, class_sets[perm[i]])
            for i, it in enumerate(data)
        ]
        scores.append(loocv(shuffled, cfg).macro_f1)
    assert abs(float(np.mean(scores)) - prior) <= 0.15


def test_threshold_sweep_monotone():
    rng = np.random.default_rng(9)
    data = separable_data(rng)
    # blur the clusters so mid thresholds actually vary
    data = [
        LabeledRelationship(it.key, np.asarray(it.descriptor) + rng.normal(0, 0.3, 8), it.classes)
        for it in data
    ]
    cfg = ClassifierConfig(class_list=("up", "down", "left"))
    report = loocv(data, cfg)
    for c in cfg.class_list:
        prev_pred = None
        prev_precision = None
        for pt in report.sweep:
            m = pt.per_class[c]
            predicted = m.tp + m.fp
            if prev_pred is not None:
                assert predicted <= prev_pred  # raising t never adds predictions
                if predicted > 0 and prev_pred > 0:
                    assert m.precision >= prev_precision - 1e-12
            prev_pred = predicted
            prev_precision = m.precision
        recalls = [pt.per_class[c].recall for pt in report.sweep]
        assert all(a >= b - 1e-12 for a, b in zip(recalls, recalls[1:]))


def test_generator_deterministic():
    for cls in ("bridging", "none"):
        a = generate_synthetic(cls, 10, rng_seed=77)
        b = generate_synthetic(cls, 10, rng_seed=77)
        assert len(a) == len(b) == 10
        for ((s1, t1), c1), ((s2, t2), c2) in zip(a, b):
            assert c1 == c2
            assert s1.geom.equals_exact(s2.geom, 0)
            assert t1.geom.equals_exact(t2.geom, 0)


def test_generator_unknown_class():
    with pytest.raises(ConfigMismatchError):
        generate_synthetic("levitating", 3, rng_seed=0)


def test_generator_surrounding_property():
    for (src, tgt), classes in generate_synthetic("surrounding", 15, rng_seed=3):
        assert classes == frozenset({"surrounding"})
        hull = src.geom.convex_hull
        cx, cy = centroid(tgt)
        from shapely.geometry import Point

        assert hull.contains(Point(cx, cy))


def test_generator_pairs_pass_preconditions():
    for cls in SYNTHETIC_CLASSES:
        for (src, tgt), classes in generate_synthetic(cls, 4, rng_seed=11):
            desc = raid(src, tgt, image_area=160 * 130)
            assert desc.bins.sum() == pytest.approx(1.0, abs=1e-9)
            sc = shape_context(src, tgt)
            assert sc.bins.sum() == pytest.approx(1.0, abs=1e-9)
            if cls == "none":
                assert classes == frozenset()
            else:
                assert classes == frozenset({cls})


def test_synthetic_dataset_layout():
    images, labels = synthetic_dataset(("between", "none"), 3, seed=5)
    assert len(images) == 6
    assert len(labels) == 6
    for img in images:
        assert img.width == 160 and img.height == 130
        assert {r.region_id for r in img.regions} == {"s", "t"}
        for r in img.regions:
            minx, miny, maxx, maxy = r.geometry.bounds
            assert 0 <= minx and 0 <= miny and maxx <= 160 and maxy <= 130
        assert (img.image_id, "s", "b") in labels
    # the same seed and classes regenerate identical geometry
    again, _ = synthetic_dataset(("between", "none"), 3, seed=5)
    for a, b in zip(images, again):
        assert a.regions[0].geometry.geom.equals_exact(b.regions[0].geometry.geom, 0)


def test_relationships_from_dataset():
    images, labels = synthetic_dataset(("riding",), 3, seed=6)
    items = relationships_from_dataset(images, labels, kind="raid")
    assert len(items) == 3
    assert all(it.classes == frozenset({"riding"}) for it in items)
    assert all(it.descriptor.flat.shape == (256,) for it in items)
    sc_items = relationships_from_dataset(images, labels, kind="sc")
    assert all(it.descriptor.flat.shape == (16,) for it in sc_items)
    with pytest.raises(NotFoundError):
        relationships_from_dataset(images, {("ghost", "s", "b"): frozenset()})
    with pytest.raises(NotFoundError):
        relationships_from_dataset(images, {(images[0].image_id, "s", "zebra"): frozenset()})


def test_render_report(tmp_path):
    rng = np.random.default_rng(10)
    data = separable_data(rng)
    cfg = ClassifierConfig(class_list=("up", "down", "left"))
    report = loocv(data, cfg)
    written = render_report(report, str(tmp_path / "out"))
    names = {os.path.basename(p) for p in written}
    assert {"report.txt", "report.json"} <= names
    payload = json.load(open(tmp_path / "out" / "report.json"))
    assert payload["macro_f1"] == pytest.approx(1.0)
    assert payload["confusion"]["labels"] == ["up", "down", "left", "none"]
    assert len(payload["sweep"]) == 9
    text = open(tmp_path / "out" / "report.txt").read()
    assert "macro F1: 1.000" in text
    if "threshold_sweep.png" in names:
        assert (tmp_path / "out" / "threshold_sweep.png").stat().st_size > 0


def test_benchmark_classes_match_spec_list():
    assert set(SYNTHETIC_CLASSES) == set(CLASS_NAMES) | {"none"}
