"""Prompt templates, token budgeting, identifier extraction, and clients."""

import pytest

from conftest import make_unit
from ccrag.completion import (
    ClientConfig,
    HttpChatClient,
    MockChatClient,
    PromptTemplate,
    build_identifier_prompt,
    build_similarity_prompt,
    complete,
    count_tokens,
    enforce_token_budget,
    extract_code_block,
    load_template,
    need_to_lookup,
)
from ccrag.errors import ConfigError, LlmHttpError, LlmUnavailable, TemplateMismatch
from ccrag.identifier_index import build_identifier_index
from ccrag.retrieval import ScoredSnippet
from ccrag.units import UnitKind

CONTEXT = "int add(int a, int b) {\n"


def snippet(doc_id, text, rank):
    return ScoredSnippet(
        doc_id=doc_id,
        unit=make_unit("f", text),
        technique="bm25",
        score=10.0 - rank,
        rank=rank,
    )


class TestTemplates:
    @pytest.mark.parametrize(
        "template_id", ["similar", "msg-def", "class-def", "func-dec", "func-def"]
    )
    @pytest.mark.parametrize("language", ["en", "zh"])
    def test_all_templates_load(self, template_id, language):
        template = load_template(template_id, language)
        assert template.body.count("{current_code}") == 1

    def test_missing_placeholder_rejected(self):
        with pytest.raises(ConfigError):
            PromptTemplate(id="similar", language="en", body="no placeholders")

    def test_unknown_id_rejected(self):
        with pytest.raises(ConfigError):
            PromptTemplate(id="other", language="en", body="{snippets}{current_code}")


class TestTokenCounting:
    def test_code_counter(self):
        assert count_tokens("int add(int a, int b)") == 6

    def test_chars4_counter(self):
        assert count_tokens("x" * 9, "chars4") == 3

    def test_unknown_counter(self):
        with pytest.raises(ConfigError):
            count_tokens("x", "words")

    def test_enforce(self):
        n, ok = enforce_token_budget("a b c", 3)
        assert (n, ok) == (3, True)
        _, ok = enforce_token_budget("a b c d", 3)
        assert not ok

    def test_bad_budget(self):
        with pytest.raises(ConfigError):
            enforce_token_budget("x", 0)


class TestBudgetedPrompts:
    def test_all_snippets_fit(self):
        template = load_template("similar")
        snippets = [snippet(f"d{i}", f"void f{i}() {{ }}", i + 1) for i in range(3)]
        bundle = build_similarity_prompt(snippets, CONTEXT, template, budget=2048)
        assert bundle.included_doc_ids == ("d0", "d1", "d2")
        assert not bundle.truncated
        assert bundle.token_count <= 2048
        assert CONTEXT.strip() in bundle.text

    def test_lowest_ranks_dropped_first(self):
        template = load_template("similar")
        snippets = [
            snippet(f"d{i}", f"void f{i}() {{ int x{i} = {i}; }}", i + 1)
            for i in range(4)
        ]
        full = build_similarity_prompt(snippets, CONTEXT, template, budget=4096)
        tight = build_similarity_prompt(
            snippets, CONTEXT, template, budget=full.token_count - 1
        )
        assert tight.truncated
        assert tight.included_doc_ids == full.included_doc_ids[:-1]

    def test_context_tail_kept_when_alone_too_big(self):
        template = load_template("similar")
        context = " ".join(f"tok{i}" for i in range(5000))
        bundle = build_similarity_prompt([], context, template, budget=64)
        assert bundle.context_truncated
        assert bundle.token_count <= 64
        assert "tok4999" in bundle.text
        assert "tok0 " not in bundle.text

    def test_rank_order_in_prompt(self):
        template = load_template("similar")
        snippets = [snippet("d2", "void second() { }", 2),
                    snippet("d1", "void first() { }", 1)]
        bundle = build_similarity_prompt(snippets, CONTEXT, template)
        assert bundle.text.index("first") < bundle.text.index("second")

    def test_identifier_prompt_kind_checked(self):
        knowledge = [make_unit("User", "message User { }", kind=UnitKind.MSG_DEF)]
        with pytest.raises(TemplateMismatch):
            build_identifier_prompt(
                UnitKind.MSG_DEF, knowledge, CONTEXT, load_template("class-def")
            )

    def test_identifier_prompt_contains_knowledge(self):
        knowledge = [make_unit("User", "message User { string id = 1; }",
                               kind=UnitKind.MSG_DEF, path="m.proto")]
        bundle = build_identifier_prompt(
            UnitKind.MSG_DEF, knowledge, CONTEXT, load_template("msg-def")
        )
        assert "message User" in bundle.text
        assert bundle.snippet_count == 1


class TestNeedToLookup:
    def test_model_reply_parsed(self):
        client = MockChatClient(
            '{"messages": ["User"], "functions": ["SendReq"], "classes": ["Conn"]}'
        )
        request = need_to_lookup("code", client)
        assert request.messages == frozenset({"User"})
        assert request.functions == frozenset({"SendReq"})
        assert request.classes == frozenset({"Conn"})
        assert not request.from_fallback
        assert client.calls == 1

    def test_malformed_reply_retried_then_fallback(self):
        client = MockChatClient("not json at all")
        request = need_to_lookup("DoWork(x);", client)
        assert request.from_fallback
        assert client.calls == 2
        assert "DoWork" in request.functions

    def test_unavailable_client_falls_back(self):
        class DownClient:
            def chat(self, messages):
                raise LlmUnavailable("down")

        request = need_to_lookup("DoWork(x);", DownClient())
        assert request.from_fallback

    def test_fallback_classifies_messages_with_store(self):
        units = [make_unit("UserMsg", "message UserMsg { }", kind=UnitKind.MSG_DEF,
                           path="m.proto")]
        store = build_identifier_index(units)
        code = "UserMsg msg;\nConnPool pool;\n"
        from ccrag.completion import _static_need_to_lookup

        request = _static_need_to_lookup(code, store)
        assert "UserMsg" in request.messages
        assert "ConnPool" in request.classes

    def test_categories_disjoint(self):
        client = MockChatClient(
            '{"messages": ["A"], "functions": ["A", "B"], "classes": ["A"]}'
        )
        request = need_to_lookup("code", client)
        assert request.messages == frozenset({"A"})
        assert request.classes == frozenset()
        assert request.functions == frozenset({"B"})


class TestExtractCodeBlock:
    def test_fenced(self):
        assert extract_code_block("text\n```cpp\nint x;\n```\nmore") == "int x;"

    def test_brace_balanced(self):
        reply = "Sure thing.\nint f() {\n  return 1;\n}\nHope that helps."
        assert extract_code_block(reply) == "int f() {\n  return 1;\n}"

    def test_raw_fallback(self):
        assert extract_code_block("  return x;  ") == "return x;"


class _FakeResponse:
    def __init__(self, status_code, payload=None, headers=None):
        self.status_code = status_code
        self._payload = payload or {}
        self.headers = headers or {}

    def json(self):
        return self._payload


class TestHttpChatClient:
    def _ok(self, content):
        return _FakeResponse(
            200, {"choices": [{"message": {"content": content}}]}
        )

    def test_requires_endpoint(self):
        with pytest.raises(ConfigError):
            HttpChatClient(ClientConfig())

    def test_retry_on_429_with_retry_after(self, monkeypatch):
        client = HttpChatClient(ClientConfig(endpoint="http://c"))
        calls = []
        slept = []

        def fake_post(url, json=None, headers=None, timeout=None):
            calls.append(url)
            if len(calls) == 1:
                return _FakeResponse(429, headers={"Retry-After": "0.01"})
            return self._ok("done")

        monkeypatch.setattr("ccrag.completion.requests.post", fake_post)
        monkeypatch.setattr("ccrag.completion.time.sleep", slept.append)
        assert client.chat([{"role": "user", "content": "hi"}]) == "done"
        assert client.retries_used == 1
        assert slept == [0.01]

    def test_client_error_not_retried(self, monkeypatch):
        client = HttpChatClient(ClientConfig(endpoint="http://c"))
        monkeypatch.setattr(
            "ccrag.completion.requests.post",
            lambda *a, **kw: _FakeResponse(400),
        )
        with pytest.raises(LlmHttpError) as exc_info:
            client.chat([{"role": "user", "content": "hi"}])
        assert exc_info.value.status == 400

    def test_persistent_5xx_raises(self, monkeypatch):
        client = HttpChatClient(ClientConfig(endpoint="http://c", max_retries=2))
        monkeypatch.setattr(
            "ccrag.completion.requests.post",
            lambda *a, **kw: _FakeResponse(503),
        )
        monkeypatch.setattr("ccrag.completion.time.sleep", lambda _s: None)
        with pytest.raises(LlmHttpError):
            client.chat([{"role": "user", "content": "hi"}])

    def test_connection_failure(self, monkeypatch):
        import requests as requests_lib

        client = HttpChatClient(ClientConfig(endpoint="http://c"))

        def boom(*a, **kw):
            raise requests_lib.ConnectionError("refused")

        monkeypatch.setattr("ccrag.completion.requests.post", boom)
        with pytest.raises(LlmUnavailable):
            client.chat([{"role": "user", "content": "hi"}])


def test_complete_builds_record():
    template = load_template("similar")
    bundle = build_similarity_prompt([], CONTEXT, template)
    client = MockChatClient("```cpp\nreturn a + b;\n}\n```")
    record = complete(bundle, client, example_id="e1", technique="base")
    assert record.generated_code == "return a + b;\n}"
    assert record.example_id == "e1"
    assert record.error is None
