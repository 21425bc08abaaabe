"""HTTP service tests over the benchmark fixture indexes."""

import pytest
from fastapi.testclient import TestClient

from ccrag.completion import MockChatClient
from ccrag.errors import LlmHttpError, LlmUnavailable
from ccrag.retrieval import Indices
from ccrag.service import create_app


@pytest.fixture()
def client(bench_env):
    app = create_app(
        bench_env["indices"], MockChatClient("```cpp\nreturn 0;\n}\n```")
    )
    return TestClient(app)


class TestHealthz:
    def test_reports_index_sizes(self, client):
        body = client.get("/healthz").json()
        assert body["status"] == "ok"
        assert body["indexes"]["lexical"]["docs"] > 0
        assert body["indexes"]["semantic"]["docs"] > 0
        assert body["indexes"]["identifier"]["msg-def"] >= 1

    def test_missing_indexes_reported_null(self):
        app = create_app(Indices())
        body = TestClient(app).get("/healthz").json()
        assert body["indexes"]["lexical"] is None


class TestRetrieve:
    def test_basic(self, client):
        resp = client.post(
            "/retrieve",
            json={"query": "int GetValue(KvTable* table", "technique": "bm25", "k": 2},
        )
        assert resp.status_code == 200
        results = resp.json()["results"]
        assert len(results) == 2
        assert results[0]["rank"] == 1
        assert "GetValue" in results[0]["text"]

    def test_hybrid_includes_provenance(self, client):
        resp = client.post(
            "/retrieve", json={"query": "open channel host port", "technique": "hybrid"}
        )
        assert resp.status_code == 200
        assert resp.json()["results"][0]["provenance"]["source"] in (
            "bm25", "semantic",
        )

    @pytest.mark.parametrize(
        "body",
        [
            {"query": "x", "k": 0},
            {"query": "x", "k": "four"},
            {"query": "", "k": 2},
            {"query": "x", "technique": "grep"},
            {"query": "x", "mode": "chat"},
            {"k": 2},
        ],
    )
    def test_schema_violations_are_400(self, client, body):
        assert client.post("/retrieve", json=body).status_code == 400

    def test_invalid_json_is_400(self, client):
        resp = client.post(
            "/retrieve",
            content=b"not json",
            headers={"Content-Type": "application/json"},
        )
        assert resp.status_code == 400

    def test_missing_index_is_503(self):
        app = create_app(Indices())
        resp = TestClient(app).post("/retrieve", json={"query": "x"})
        assert resp.status_code == 503


class TestComplete:
    def test_basic(self, client):
        resp = client.post(
            "/complete",
            json={"context": "int GetValue(KvTable* table", "technique": "bm25"},
        )
        assert resp.status_code == 200
        body = resp.json()
        assert body["generated_code"] == "return 0;\n}"
        assert body["token_count"] > 0
        assert body["included_doc_ids"]

    def test_base_skips_retrieval(self, client):
        resp = client.post(
            "/complete", json={"context": "int x = ", "technique": "base"}
        )
        assert resp.status_code == 200
        assert resp.json()["included_doc_ids"] == []

    def test_no_client_is_503(self, bench_env):
        app = create_app(bench_env["indices"])
        resp = TestClient(app).post("/complete", json={"context": "x"})
        assert resp.status_code == 503

    def test_upstream_down_is_502(self, bench_env):
        class DownClient:
            def chat(self, messages):
                raise LlmUnavailable("connection refused")

        app = create_app(bench_env["indices"], DownClient())
        resp = TestClient(app).post(
            "/complete", json={"context": "x y z", "technique": "base"}
        )
        assert resp.status_code == 502

    def test_upstream_http_error_is_502(self, bench_env):
        class ErrClient:
            def chat(self, messages):
                raise LlmHttpError("rate limited", status=429)

        app = create_app(bench_env["indices"], ErrClient())
        resp = TestClient(app).post(
            "/complete", json={"context": "x y z", "technique": "base"}
        )
        assert resp.status_code == 502

    def test_empty_context_is_400(self, client):
        assert client.post("/complete", json={"context": " "}).status_code == 400
