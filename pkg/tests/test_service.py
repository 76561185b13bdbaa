import json

import numpy as np
import pytest
from fastapi.testclient import TestClient

from raid.dataset import ImageRecord, LabeledRegion, load_dataset
from raid.descriptor import raid
from raid.baseline import shape_context
from raid.geometry import PolygonSet
from raid.indexing import QuerySpec, VerbStore, build_index, query, save_index
from raid.service import create_app, result_payload


def square(x0, y0, side):
    return [(x0, y0), (x0 + side, y0), (x0 + side, y0 + side), (x0, y0 + side)]


def region(region_id, label, x0, y0, side):
    return LabeledRegion(region_id, label, PolygonSet.from_rings([square(x0, y0, side)]))


def fixture_images():
    # "pier" has hand-placed regions so tests can refer to exact keys
    images = [
        ImageRecord(
            "pier",
            100,
            80,
            (region("s", "person", 10, 55, 20), region("t", "horse", 28, 49, 14)),
        )
    ]
    rng = np.random.default_rng(19)
    labels = ["person", "horse", "table"]
    for i in range(4):
        regions = []
        for j in range(int(rng.integers(2, 5))):
            x0 = float(rng.uniform(5, 60))
            y0 = float(rng.uniform(5, 45))
            side = float(rng.uniform(10, 22))
            regions.append(
                region(f"r{j}", labels[int(rng.integers(0, 3))], x0, y0, side)
            )
        images.append(ImageRecord(f"img{i:02d}", 100, 80, tuple(regions)))
    return images


class Env:
    pass


@pytest.fixture(scope="module")
def env(tmp_path_factory):
    from raid.dataset import save_annotations

    root = tmp_path_factory.mktemp("service")
    e = Env()
    e.ann_path = str(root / "annotations.json")
    e.idx_path = str(root / "index.bin")
    e.verbs_path = str(root / "verbs.txt")
    save_annotations(fixture_images(), e.ann_path)
    # index from the file the service reads, so key queries are bit-exact
    dataset = load_dataset(e.ann_path)
    e.images = dataset.images
    e.images_by_id = {img.image_id: img for img in e.images}
    e.index = build_index(dataset)
    save_index(e.index, e.idx_path)
    app = create_app(
        index_path=e.idx_path,
        annotations_path=e.ann_path,
        verb_store_path=e.verbs_path,
    )
    e.client = TestClient(app)
    return e


def wire_square(x0, y0, side):
    return [[x0, y0], [x0 + side, y0], [x0 + side, y0 + side], [x0, y0 + side]]


def flipped(rings, height):
    return PolygonSet.from_rings(
        [[(x, height - y) for x, y in ring] for ring in rings]
    )


def test_list_images_pagination(env):
    r = env.client.get("/images")
    assert r.status_code == 200
    body = r.json()
    assert body["total"] == len(env.images)
    assert [img["image_id"] for img in body["images"]] == [
        img.image_id for img in env.images
    ]

    r = env.client.get("/images", params={"limit": 2, "offset": 1})
    page = r.json()
    assert page["total"] == len(env.images)
    assert [img["image_id"] for img in page["images"]] == [
        img.image_id for img in env.images[1:3]
    ]

    assert env.client.get("/images", params={"limit": 0}).status_code == 400
    assert env.client.get("/images", params={"offset": -1}).status_code == 400


def test_image_detail_round_trips_file_coordinates(env):
    # wire rings must match the y-down annotation file, not the math frame
    raw = json.load(open(env.ann_path))
    file_rings = {}
    for ann in raw["annotations"]:
        if ann["image_id"] == "pier":
            flat = ann["segmentation"][0]
            file_rings[ann["id"]] = {
                (flat[i], flat[i + 1]) for i in range(0, len(flat), 2)
            }
    r = env.client.get("/images/pier")
    assert r.status_code == 200
    body = r.json()
    assert body["width"] == 100 and body["height"] == 80
    assert len(body["regions"]) == 2
    for reg in body["regions"]:
        got = {(round(x, 4), round(y, 4)) for x, y in reg["rings"][0]}
        assert got == file_rings[reg["region_id"]]
        assert reg["holes"] == [False]


def test_image_not_found(env):
    r = env.client.get("/images/nope")
    assert r.status_code == 404
    err = r.json()["error"]
    assert set(err) == {"code", "message", "detail"}
    assert err["code"] == "not_found"


def test_descriptor_matches_library(env):
    src = wire_square(10, 5, 20)
    tgt = wire_square(28, 17, 14)
    r = env.client.post(
        "/descriptor",
        json={"source": [src], "target": [tgt], "width": 100, "height": 80},
    )
    assert r.status_code == 200
    body = r.json()
    expected = raid(
        flipped([src], 80), flipped([tgt], 80), image_area=100 * 80
    )
    assert body["kind"] == "raid"
    assert body["r_max"] == expected.r_max
    assert body["values"] == [float(v) for v in expected.flat]
    assert len(body["values"]) == 256
    assert sum(body["values"]) == pytest.approx(1.0, abs=1e-6)
    assert body["fallback_bins"] == [list(kl) for kl in expected.fallback_bins]


def test_descriptor_sc_kind(env):
    src = wire_square(10, 5, 20)
    tgt = wire_square(28, 17, 14)
    r = env.client.post(
        "/descriptor",
        json={"source": [src], "target": [tgt], "width": 100, "height": 80, "kind": "sc"},
    )
    assert r.status_code == 200
    body = r.json()
    expected = shape_context(flipped([src], 80), flipped([tgt], 80))
    assert body["kind"] == "sc"
    assert len(body["values"]) == 16
    assert body["values"] == [float(v) for v in expected.flat]


def test_descriptor_errors(env):
    src = [wire_square(10, 5, 20)]
    tgt = [wire_square(28, 17, 14)]

    def post(**overrides):
        body = {"source": src, "target": tgt, "width": 100, "height": 80}
        body.update(overrides)
        return env.client.post("/descriptor", json=body)

    assert post(width=None).status_code == 400
    assert post(width="wide").json()["error"]["code"] == "bad_request"
    assert post(kind="hog").json()["error"]["code"] == "bad_request"
    assert post(source=None).json()["error"]["code"] == "bad_request"
    assert post(source=[[[0, 0], [5, 5]]]).json()["error"]["code"] == "bad_request"

    collinear = post(source=[[[0, 0], [10, 10], [20, 20]]])
    assert collinear.status_code == 400
    assert collinear.json()["error"]["code"] == "degenerate_region"

    far = post(target=[wire_square(80, 60, 5)])
    assert far.status_code == 400
    assert far.json()["error"]["code"] == "empty_relationship"


def test_query_by_image_key_self_retrieval(env):
    r = env.client.post(
        "/query",
        json={
            "image_id": "pier",
            "source_region_id": "s",
            "target_label": "horse",
            "min_area_fraction": 0,
        },
    )
    assert r.status_code == 200
    body = r.json()
    assert body["query_id"]
    top = body["results"][0]
    assert top["distance"] == 0.0
    assert (top["image_id"], top["source_region_id"], top["target_label"]) == (
        "pier",
        "s",
        "horse",
    )
    assert top["width"] == 100 and top["height"] == 80
    assert top["source_outline"]["rings"]
    assert top["target_outline"]["rings"]


def test_query_inline_descriptor_matches_library(env):
    row = len(env.index) // 2
    values = env.index.descriptors[row].astype(float).tolist()
    r = env.client.post(
        "/query",
        json={
            "descriptor": {"values": values},
            "min_area_fraction": 0,
            "top_n": 8,
        },
    )
    assert r.status_code == 200
    spec = QuerySpec(
        descriptor=np.asarray(values), min_area_fraction=0.0, top_n=8
    )
    expected = result_payload(query(env.index, spec), env.images_by_id)
    assert r.json()["results"] == expected


def test_query_filters_match_library(env):
    values = env.index.descriptors[0].astype(float).tolist()
    r = env.client.post(
        "/query",
        json={
            "descriptor": {"values": values},
            "source_label": "horse",
            "min_area_fraction": 0.02,
            "top_n": 50,
        },
    )
    spec = QuerySpec(
        descriptor=np.asarray(values),
        source_label="horse",
        min_area_fraction=0.02,
        top_n=50,
    )
    expected = result_payload(query(env.index, spec), env.images_by_id)
    assert r.json()["results"] == expected
    assert all(e["source_label"] == "horse" for e in expected)


def test_query_source_validation(env):
    post = lambda body: env.client.post("/query", json=body)
    assert post({}).json()["error"]["code"] == "bad_request"
    values = [0.0] * 256
    two = post({"descriptor": {"values": values}, "verb": "x"})
    assert two.json()["error"]["code"] == "bad_request"
    assert post({"image_id": "pier"}).json()["error"]["code"] == "bad_request"
    missing = post(
        {"image_id": "zzz", "source_region_id": "s", "target_label": "horse"}
    )
    assert missing.status_code == 404
    assert post({"descriptor": {}}).json()["error"]["code"] == "bad_request"
    short = post({"descriptor": {"values": [0.5, 0.5]}})
    assert short.status_code == 400
    assert short.json()["error"]["code"] == "config_mismatch"
    bad_n = post({"descriptor": {"values": values}, "top_n": 0})
    assert bad_n.json()["error"]["code"] == "bad_request"
    bad_frac = post({"descriptor": {"values": values}, "min_area_fraction": "lots"})
    assert bad_frac.json()["error"]["code"] == "bad_request"


def test_verb_round_trip_and_query(env):
    src = [wire_square(10, 5, 20)]
    tgt = [wire_square(28, 17, 14)]
    desc = env.client.post(
        "/descriptor",
        json={"source": src, "target": tgt, "width": 100, "height": 80},
    ).json()

    r = env.client.post(
        "/verbs",
        json={"name": "flanks", "descriptor": desc, "created_from": "sketch"},
    )
    assert r.status_code == 200
    assert r.json() == {"name": "flanks", "created_from": "sketch"}
    assert "flanks" in env.client.get("/verbs").json()["verbs"]

    back = env.client.get("/verbs/flanks").json()
    assert back["descriptor"]["values"] == desc["values"]
    assert back["descriptor"]["r_max"] == desc["r_max"]

    # the saved verb is visible to direct store readers too
    entry = VerbStore(env.verbs_path).lookup("flanks")
    assert [float(v) for v in entry.descriptor.flat] == desc["values"]

    by_verb = env.client.post(
        "/query", json={"verb": "flanks", "min_area_fraction": 0, "top_n": 5}
    ).json()
    inline = env.client.post(
        "/query",
        json={
            "descriptor": {"values": desc["values"]},
            "min_area_fraction": 0,
            "top_n": 5,
        },
    ).json()
    assert by_verb["results"] == inline["results"]
    assert by_verb["query_id"] != inline["query_id"]


def test_verb_conflict_and_missing(env):
    desc = {"values": [1.0 / 256] * 256, "r_max": 12.5}
    assert (
        env.client.post("/verbs", json={"name": "dup", "descriptor": desc}).status_code
        == 200
    )
    again = env.client.post("/verbs", json={"name": "dup", "descriptor": desc})
    assert again.status_code == 409
    assert again.json()["error"]["code"] == "conflict"

    assert env.client.get("/verbs/nonesuch").status_code == 404
    assert env.client.post("/query", json={"verb": "nonesuch"}).status_code == 404

    r = env.client.post("/verbs", json={"name": "partial", "descriptor": {"values": [1.0]}})
    assert r.status_code == 400
    wrong = env.client.post(
        "/verbs", json={"name": "short", "descriptor": {"values": [1.0], "r_max": 3.0}}
    )
    assert wrong.json()["error"]["code"] == "config_mismatch"


def test_feedback_drives_precision_curve(env):
    body = env.client.post(
        "/query",
        json={
            "image_id": "pier",
            "source_region_id": "s",
            "target_label": "horse",
            "min_area_fraction": 0,
            "top_n": 5,
        },
    ).json()
    qid = body["query_id"]
    results = body["results"]
    assert len(results) >= 4

    def mark(entry, relevant):
        return env.client.post(
            "/feedback",
            json={
                "query_id": qid,
                "image_id": entry["image_id"],
                "source_region_id": entry["source_region_id"],
                "target_label": entry["target_label"],
                "relevant": relevant,
            },
        )

    for i in range(3):
        assert mark(results[i], True).status_code == 200
    r = mark(results[3], False)
    assert r.json()["labeled"] == 4

    curve = env.client.get(f"/queries/{qid}/precision").json()
    assert [p["n"] for p in curve["points"]] == [1, 2, 3, 4]
    assert [p["precision"] for p in curve["points"]] == pytest.approx(
        [1.0, 1.0, 1.0, 0.75]
    )

    # re-marking overwrites rather than appending
    assert mark(results[3], True).json()["labeled"] == 4
    curve = env.client.get(f"/queries/{qid}/precision").json()
    assert [p["precision"] for p in curve["points"]] == pytest.approx([1.0] * 4)


def test_precision_stops_at_unlabeled_prefix(env):
    body = env.client.post(
        "/query",
        json={
            "image_id": "pier",
            "source_region_id": "s",
            "target_label": "horse",
            "min_area_fraction": 0,
            "top_n": 5,
        },
    ).json()
    qid = body["query_id"]
    results = body["results"]
    for i in (0, 2):
        env.client.post(
            "/feedback",
            json={
                "query_id": qid,
                "image_id": results[i]["image_id"],
                "source_region_id": results[i]["source_region_id"],
                "target_label": results[i]["target_label"],
                "relevant": True,
            },
        )
    curve = env.client.get(f"/queries/{qid}/precision").json()
    assert [p["n"] for p in curve["points"]] == [1]


def test_feedback_errors(env):
    r = env.client.post(
        "/feedback",
        json={
            "query_id": "bogus",
            "image_id": "pier",
            "source_region_id": "s",
            "target_label": "horse",
            "relevant": True,
        },
    )
    assert r.status_code == 404

    body = env.client.post(
        "/query",
        json={
            "image_id": "pier",
            "source_region_id": "s",
            "target_label": "horse",
            "top_n": 3,
            "min_area_fraction": 0,
        },
    ).json()
    r = env.client.post(
        "/feedback",
        json={
            "query_id": body["query_id"],
            "image_id": "pier",
            "source_region_id": "never",
            "target_label": "horse",
            "relevant": True,
        },
    )
    assert r.status_code == 404
    r = env.client.post("/feedback", json={"query_id": body["query_id"]})
    assert r.status_code == 400
    assert env.client.get("/queries/bogus/precision").status_code == 404


def test_bare_service_reports_missing_pieces():
    client = TestClient(create_app())
    assert client.get("/images").json() == {"total": 0, "images": []}
    assert client.get("/images/x").status_code == 404

    r = client.post("/query", json={"descriptor": {"values": [0.0] * 256}})
    assert r.status_code == 400
    assert "index" in r.json()["error"]["message"]
    assert client.get("/verbs").status_code == 400

    # descriptor computation needs no index, only the default config
    src = [wire_square(10, 5, 20)]
    tgt = [wire_square(28, 17, 14)]
    r = client.post(
        "/descriptor",
        json={"source": src, "target": tgt, "width": 100, "height": 80},
    )
    assert r.status_code == 200
    assert len(r.json()["values"]) == 256


def test_static_mount_serves_ui(env, tmp_path):
    (tmp_path / "index.html").write_text("<!doctype html><h1>sketch ui</h1>")
    app = create_app(
        index_path=env.idx_path,
        annotations_path=env.ann_path,
        static_dir=str(tmp_path),
    )
    client = TestClient(app)
    r = client.get("/")
    assert r.status_code == 200
    assert "sketch ui" in r.text
    # API routes still win over the static mount
    assert client.get("/images").json()["total"] == len(env.images)
