import math

import pytest
from fastapi.testclient import TestClient

from uprkit.service import create_app


@pytest.fixture
def client():
    return TestClient(create_app())


PASSAGES = [
    {"id": "p1", "text": "velvet rook moves x", "title": ""},
    {"id": "p2", "text": "unrelated filler text x", "title": ""},
    {"id": "p3", "text": "velvet alone x", "title": ""},
]
QUERIES = [{"id": "q1", "question": "velvet rook", "answers": ["rook moves"]}]
RUN = {
    "entries": {
        "q1": [
            {"docid": "p2", "score": 3.0, "rank": 1},
            {"docid": "p3", "score": 2.0, "rank": 2},
            {"docid": "p1", "score": 1.0, "rank": 3},
        ]
    },
    "tag": "bm25",
}


class TestHealth:
    def test_ok(self, client):
        body = client.get("/v1/health").json()
        assert body["status"] == "ok"


class TestIndexAndRetrieve:
    def test_index_stats(self, client):
        response = client.post("/v1/index", json={"passages": PASSAGES})
        assert response.status_code == 200
        body = response.json()
        assert body["doc_count"] == 3
        assert body["postings"]["velvet"] == {"p1": 1, "p3": 1}

    def test_retrieve_with_inline_passages(self, client):
        response = client.post(
            "/v1/retrieve",
            json={"passages": PASSAGES, "queries": QUERIES, "depth": 10, "tag": "bm25"},
        )
        assert response.status_code == 200
        run = response.json()["run"]
        docids = [c["docid"] for c in run["entries"]["q1"]]
        assert docids[0] == "p1"  # both terms
        assert "p2" not in docids  # zero score excluded
        assert run["tag"] == "bm25"

    def test_retrieve_with_prebuilt_index(self, client):
        index = client.post("/v1/index", json={"passages": PASSAGES}).json()
        response = client.post(
            "/v1/retrieve", json={"index": index, "queries": QUERIES, "depth": 10}
        )
        assert response.status_code == 200
        inline = client.post(
            "/v1/retrieve", json={"passages": PASSAGES, "queries": QUERIES, "depth": 10}
        )
        assert response.json()["run"]["entries"] == inline.json()["run"]["entries"]

    def test_retrieve_needs_exactly_one_source(self, client):
        response = client.post("/v1/retrieve", json={"queries": QUERIES})
        assert response.status_code == 400
        assert "exactly one" in response.json()["detail"]

    def test_empty_corpus_is_data_error(self, client):
        response = client.post("/v1/index", json={"passages": []})
        assert response.status_code == 400


class TestFuse:
    def test_union(self, client):
        run_a = {"entries": {"q": [{"docid": "a", "score": 1.0, "rank": 1}]}, "tag": "A"}
        run_b = {"entries": {"q": [{"docid": "b", "score": 1.0, "rank": 1}]}, "tag": "B"}
        response = client.post("/v1/fuse", json={"runs": [run_a, run_b], "depth": 10})
        assert response.status_code == 200
        assert [c["docid"] for c in response.json()["run"]["entries"]["q"]] == ["a", "b"]

    def test_single_run_rejected(self, client):
        run_a = {"entries": {"q": [{"docid": "a", "score": 1.0, "rank": 1}]}, "tag": "A"}
        assert client.post("/v1/fuse", json={"runs": [run_a], "depth": 10}).status_code == 400


class TestRerank:
    def test_mock_rerank_reorders(self, client):
        response = client.post(
            "/v1/rerank",
            json={"passages": PASSAGES, "queries": QUERIES, "run": RUN, "depth": 10},
        )
        assert response.status_code == 200
        run = response.json()["run"]
        assert run["tag"] == "bm25+upr"
        assert [c["docid"] for c in run["entries"]["q1"]] == ["p1", "p3", "p2"]
        top = run["entries"]["q1"][0]
        assert top["score"] == pytest.approx(math.log(0.9), abs=1e-12)

    def test_unresolvable_candidate_is_data_error(self, client):
        run = {"entries": {"q1": [{"docid": "ghost", "score": 1.0, "rank": 1}]}, "tag": "x"}
        response = client.post(
            "/v1/rerank", json={"passages": PASSAGES, "queries": QUERIES, "run": run}
        )
        assert response.status_code == 400
        assert "ghost" in response.json()["detail"]

    def test_unreachable_remote_scorer_maps_to_502(self, client):
        response = client.post(
            "/v1/rerank",
            json={
                "passages": PASSAGES,
                "queries": QUERIES,
                "run": RUN,
                "scorer": {"kind": "remote", "endpoint": "http://127.0.0.1:9", "timeout": 0.2},
            },
        )
        assert response.status_code == 502
        assert response.json()["error"] == "scorer_transport"

    def test_direction_validation_is_422(self, client):
        response = client.post(
            "/v1/rerank",
            json={
                "passages": PASSAGES,
                "queries": QUERIES,
                "run": RUN,
                "options": {"direction": "sideways"},
            },
        )
        assert response.status_code == 422


class TestEvaluate:
    def test_accuracy(self, client):
        response = client.post(
            "/v1/evaluate/accuracy",
            json={"run": RUN, "queries": QUERIES, "passages": PASSAGES, "ks": [1, 3]},
        )
        assert response.status_code == 200
        body = response.json()
        assert body["fractions"]["1"] == 0.0  # p2 holds rank 1
        assert body["fractions"]["3"] == 1.0
        assert body["query_count"] == 1

    def test_rank_metrics(self, client):
        response = client.post(
            "/v1/evaluate/rank-metrics",
            json={"run": RUN, "qrels": {"q1": {"p1": 1}}, "ndcg_k": 10, "recall_k": 100},
        )
        body = response.json()
        assert body["ndcg"]["value"] == pytest.approx(1 / math.log2(4), abs=1e-9)
        assert body["recall"]["value"] == 1.0


class TestProfile:
    def test_two_depths(self, client):
        response = client.post(
            "/v1/profile",
            json={
                "passages": PASSAGES,
                "queries": QUERIES,
                "run": RUN,
                "depths": [1, 3],
                "accuracy_k": 3,
            },
        )
        assert response.status_code == 200
        body = response.json()
        assert [row["depth"] for row in body["rows"]] == [1, 3]
        assert body["scorer_identity"] == "mock"
