from fastapi.testclient import TestClient

from nsp_service.app import create_app
from nsp_service.config import ServiceConfig


def make_client(fake_scorer, max_batch=8):
    config = ServiceConfig(model="fake", max_batch=max_batch)
    return TestClient(create_app(config, scorer=fake_scorer))


class TestHealth:
    def test_health_returns_200(self, fake_scorer):
        client = make_client(fake_scorer)
        response = client.get("/v1/health")
        assert response.status_code == 200
        assert response.json()["status"] == "ok"


class TestScore:
    def test_single_pair(self, fake_scorer):
        client = make_client(fake_scorer)
        response = client.post(
            "/v1/nsp",
            json={"pairs": [{"statement": "hello", "response": "hi there"}]},
        )
        assert response.status_code == 200
        body = response.json()
        assert list(body.keys()) == ["results"]
        assert len(body["results"]) == 1
        assert 0.0 <= body["results"][0]["p_next"] <= 1.0

    def test_batch_order_aligned(self, fake_scorer):
        client = make_client(fake_scorer)
        pairs = [{"statement": f"s{i}", "response": f"r{i}"} for i in range(5)]
        response = client.post("/v1/nsp", json={"pairs": pairs})
        assert response.status_code == 200
        results = response.json()["results"]
        assert len(results) == 5
        expected = fake_scorer.score_batch([(f"s{i}", f"r{i}") for i in range(5)])
        assert [r["p_next"] for r in results] == expected

    def test_empty_batch(self, fake_scorer):
        client = make_client(fake_scorer)
        response = client.post("/v1/nsp", json={"pairs": []})
        assert response.status_code == 200
        assert response.json() == {"results": []}

    def test_oversized_batch_is_413(self, fake_scorer):
        client = make_client(fake_scorer, max_batch=3)
        pairs = [{"statement": "s", "response": f"r{i}"} for i in range(4)]
        response = client.post("/v1/nsp", json={"pairs": pairs})
        assert response.status_code == 413

    def test_malformed_body_rejected(self, fake_scorer):
        client = make_client(fake_scorer)
        response = client.post("/v1/nsp", json={"wrong": "shape"})
        assert response.status_code == 422

    def test_identical_pair_scores_identically(self, fake_scorer):
        client = make_client(fake_scorer)
        body = {"pairs": [{"statement": "a", "response": "b"}]}
        first = client.post("/v1/nsp", json=body).json()
        second = client.post("/v1/nsp", json=body).json()
        assert first == second
