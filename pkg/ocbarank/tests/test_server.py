from __future__ import annotations

import numpy as np
import pytest
from fastapi.testclient import TestClient

from ocbarank.metrics import MetricSeries
from ocbarank.server import create_app
from ocbarank.tests.conftest import load_resource


@pytest.fixture
def client(tmp_path) -> TestClient:
    series = MetricSeries(
        t=np.array([10, 20], dtype=np.int64),
        pfs=np.array([0.5, 0.0]),
        eoc=np.array([1.0, 0.0]),
        cr=np.array([2.0, 3.0]),
        alloc_mean=np.array([[0.5, 0.5], [0.4, 0.6]]),
        reps=2,
    )
    series.to_csv(tmp_path / "pair_ocba1_d1.csv")
    return TestClient(create_app(tmp_path))


def test_instances(client) -> None:
    response = client.get("/instances")
    assert response.status_code == 200
    body = response.json()
    assert [item["name"] for item in body] == ["instance1", "instance2"]
    assert body[1]["sigma"][0] == 10.0
    assert body[0]["best"] == 10


def test_theory(client) -> None:
    response = client.get("/theory/instance2")
    assert response.status_code == 200
    expected = load_resource("instance2")
    assert response.json()["alpha_star"] == pytest.approx(expected["alpha_star"], rel=1e-11)
    assert client.get("/theory/instance2", params={"delta": 10}).json()["delta"] == 10


def test_theory_unknown_instance(client) -> None:
    assert client.get("/theory/instance3").status_code == 404
    assert client.get("/theory/instance1", params={"delta": 0}).status_code == 422


def test_results_listing_and_rows(client) -> None:
    listing = client.get("/results").json()
    assert listing == [{"file": "pair_ocba1_d1.csv", "manifest": None}]
    rows = client.get("/results/pair_ocba1_d1.csv").json()
    assert rows[0]["t"] == 10
    assert rows[1]["pfs_rate"] is None
    assert rows[1]["alloc_mean_2"] == pytest.approx(0.6)


def test_results_missing_file(client) -> None:
    assert client.get("/results/nope.csv").status_code == 404
    assert client.get("/results/manifest.json").status_code == 404
