import json
import math

import numpy as np
import pytest
from fastapi.testclient import TestClient

from stochreach.pipeline import pendulum_demo_config
from stochreach.serialize import canonical_json
from stochreach.service.app import app


@pytest.fixture(scope="module")
def client():
    return TestClient(app)


@pytest.fixture(scope="module")
def small_config():
    return pendulum_demo_config(n_paths=200, dt=1e-2, seed=3).model_dump(
        mode="json")


def test_health(client):
    r = client.get("/health")
    assert r.status_code == 200
    assert r.json()["status"] == "ok"


def test_certify_endpoint(client, small_config):
    r = client.post("/certify", json=small_config)
    assert r.status_code == 200
    cert = r.json()["certificate"]
    assert cert["provenance"] == "PROVEN"
    assert cert["d_P"] == pytest.approx(0.0127)
    assert max(cert["verification"]["margins"]) <= 0.05
    assert cert["config_hash"] == r.json()["config_hash"]


def test_reach_endpoint_shapes(client, small_config):
    r = client.post("/reach", json=small_config)
    assert r.status_code == 200
    body = r.json()
    assert set(body["methods"]) == {"contraction", "interval"}
    for method, payload in body["methods"].items():
        assert [s["t"] for s in payload["sets"]] == [1.0, 2.0, 4.0]
        assert len(payload["polygons"]) == 3
        for s in payload["sets"]:
            assert s["rho"] > 0.0
            assert s["config_hash"] == body["config_hash"]
    assert body["methods"]["interval"]["embedding_csv"] is not None
    assert body["methods"]["contraction"]["embedding_csv"] is None
    kinds = {s["base"]["kind"] for s in body["methods"]["interval"]["sets"]}
    assert kinds == {"parallelotope"}


def test_reach_polygon_csv_parses(client, small_config):
    r = client.post("/reach", json=small_config)
    csv_text = r.json()["methods"]["contraction"]["polygons"]["contraction_t1"]
    lines = csv_text.strip().split("\n")
    assert lines[0].startswith("# config_hash=")
    assert lines[1] == "x,y"
    pts = np.array([[float(v) for v in ln.split(",")] for ln in lines[2:]])
    assert pts.shape[1] == 2 and len(pts) >= 8


def test_validate_endpoint(client, small_config):
    r = client.post("/validate", json=small_config)
    assert r.status_code == 200
    body = r.json()
    assert body["passed"] is True
    for method, payload in body["validation"].items():
        rows = payload["report"]["rows"]
        assert all(row["coverage"] >= row["target"] - row["slack"]
                   for row in rows)
        assert len(payload["endpoints"]) == 3


def test_validate_deterministic(client, small_config):
    r1 = client.post("/validate", json=small_config)
    r2 = client.post("/validate", json=small_config)
    assert canonical_json(r1.json()) == canonical_json(r2.json())


def test_infeasible_search_maps_to_422(client):
    cfg = pendulum_demo_config(method="contraction", n_paths=200,
                               dt=1e-2).model_dump(mode="json")
    cfg["certificate"] = {
        "mode": "search",
        "hull": [[[1.0, 0.0], [0.0, 1.0]]],
        "search": {"c_range": [-2.0, -0.1]},
    }
    r = client.post("/certify", json=cfg)
    assert r.status_code == 422
    assert r.json()["code"] == "infeasible_certificate"


def test_failed_user_verification_maps_to_422(client, small_config):
    cfg = json.loads(json.dumps(small_config))
    cfg["certificate"]["c_P"] = -5.0  # far below the certifiable rate
    r = client.post("/certify", json=cfg)
    assert r.status_code == 422
    assert r.json()["code"] == "infeasible_certificate"


def test_unsound_inclusion_maps_to_422(client, small_config):
    cfg = json.loads(json.dumps(small_config))
    # identity transform: the untransformed drift is not cooperative
    cfg["interval"]["transform"] = [[1.0, 0.0], [0.0, 1.0]]
    cfg["run"]["method"] = "interval"
    r = client.post("/reach", json=cfg)
    assert r.status_code == 422
    assert r.json()["code"] == "unsound_inclusion"


def test_unknown_key_rejected(client, small_config):
    cfg = json.loads(json.dumps(small_config))
    cfg["runn"] = {}
    r = client.post("/certify", json=cfg)
    assert r.status_code == 422  # pydantic validation error


def test_bonferroni_mode_splits_delta(client, small_config):
    cfg = json.loads(json.dumps(small_config))
    cfg["run"]["delta_mode"] = "bonferroni"
    cfg["run"]["method"] = "contraction"
    r = client.post("/validate", json=cfg)
    assert r.status_code == 200
    body = r.json()
    rows = body["validation"]["contraction"]["report"]["rows"]
    # delta split three ways: per-checkpoint target is 1 - delta/3
    assert all(row["target"] == pytest.approx(1.0 - 0.01 / 3) for row in rows)
    assert body["validation"]["contraction"]["report"]["delta_mode"] == "bonferroni"
    sets = body["methods"]["contraction"]["sets"]
    pointwise = client.post("/reach", json=small_config).json()
    base = {s["t"]: s["rho"]
            for s in pointwise["methods"]["contraction"]["sets"]}
    for s in sets:
        assert s["rho"] == pytest.approx(base[s["t"]] * math.sqrt(3.0))


def test_search_mode_via_service(client, small_config):
    cfg = json.loads(json.dumps(small_config))
    cfg["certificate"] = {"mode": "search", "hull": "builtin"}
    r = client.post("/certify", json=cfg)
    assert r.status_code == 200
    cert = r.json()["certificate"]
    assert cert["c_P"] <= -0.45
    assert cert["provenance"] == "PROVEN"
