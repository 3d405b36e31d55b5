from pathlib import Path

import pytest
from fastapi.testclient import TestClient

from tools.api_server import SCENARIO_DIR, app

client = TestClient(app)


def scenario(**overrides):
    data = {
        "model": {"kind": "linear", "A_d": [[1.0, 1.0], [0.0, 1.0]], "B_d": [[0.5], [1.0]]},
        "network": {"layers": [{"W": [[0.0, 0.0]], "v": [0.0]}]},
        "initial_set": {"lo": [2.5, -0.25], "hi": [3.0, 0.25]},
        "horizon": 2,
        "unsafe_sets": [{"label": "far", "region": {"lo": [10.0, 10.0], "hi": [11.0, 11.0]}}],
    }
    data.update(overrides)
    return data


def test_health():
    assert client.get("/health").json() == {"status": "ok"}


def test_reach():
    response = client.post("/reach", json={"scenario": scenario()})
    assert response.status_code == 200
    body = response.json()
    assert body["result"]["member_counts"] == [1, 1, 1]
    assert body["wall_ms"] >= 0.0


def test_verify_with_bundled_network():
    response = client.post(
        "/verify", json={"scenario": scenario(network="di_network.json"), "method": "over"}
    )
    assert response.status_code == 200
    report = response.json()["report"]
    assert report["verdict"] == "Safe"
    assert report["method"] == "over"


def test_verify_intersection():
    hit = [{"label": "hit", "region": {"lo": [2.9, 0.0], "hi": [3.1, 0.1]}}]
    response = client.post("/verify", json={"scenario": scenario(unsafe_sets=hit)})
    assert response.json()["report"]["verdict"] == "Unsafe-Intersection-Found"


@pytest.mark.parametrize(
    "payload",
    [
        {"scenario": scenario(horizon=0)},
        {"scenario": scenario(initial_set={"lo": [0.0, 0.0, 0.0], "hi": [1.0, 1.0, 1.0]})},
        {"scenario": scenario(network="missing.json")},
        {"scenario": scenario(network="../README.md")},
        {"scenario": scenario(network=str(Path(__file__).resolve()))},
        {"scenario": scenario(), "method": "nonlinear-exact-controller"},
    ],
)
def test_bad_requests_are_422(payload):
    assert client.post("/reach", json=payload).status_code == 422


def test_network_path_outside_scenarios_is_rejected():
    response = client.post("/reach", json={"scenario": scenario(network="../scenarios/../README.md")})
    assert response.status_code == 422
    assert "outside" in response.json()["detail"]


def test_absolute_path_inside_scenarios_is_allowed():
    bundled = str(SCENARIO_DIR / "di_network.json")
    response = client.post("/reach", json={"scenario": scenario(network=bundled), "method": "over"})
    assert response.status_code == 200
