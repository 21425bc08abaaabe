"""Prompt construction, token budgeting, identifier extraction, and the
chat-model client used to obtain completions."""

from __future__ import annotations

import json
import math
import os
import re
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import requests

from .cpplex import scan_directives, tokenize
from .errors import ConfigError, LlmHttpError, LlmUnavailable, TemplateMismatch
from .lexical import tokenize_code
from .retrieval import ScoredSnippet
from .units import CodeUnit, UnitKind

TEMPLATE_IDS = ("msg-def", "class-def", "func-dec", "func-def", "similar")
TEMPLATE_LANGUAGES = ("zh", "en")
DEFAULT_BUDGET = 2048

_PLACEHOLDERS = {
    "similar": ("{snippets}", "{current_code}"),
    "default": ("{knowledge}", "{current_code}"),
}


@dataclass(frozen=True)
class PromptTemplate:
    id: str
    language: str
    body: str

    def __post_init__(self):
        if self.id not in TEMPLATE_IDS:
            raise ConfigError(f"unknown template id {self.id!r}")
        if self.language not in TEMPLATE_LANGUAGES:
            raise ConfigError(f"unknown template language {self.language!r}")
        required = _PLACEHOLDERS["similar" if self.id == "similar" else "default"]
        for ph in required:
            if self.body.count(ph) != 1:
                raise ConfigError(
                    f"template {self.id}/{self.language} must contain {ph} exactly once"
                )


def load_template(template_id: str, language: str = "en") -> PromptTemplate:
    name = f"{template_id}_{language}.txt"
    body = (
        resources.files("ccrag").joinpath("templates").joinpath(name).read_text(
            encoding="utf-8"
        )
    )
    return PromptTemplate(id=template_id, language=language, body=body)


def count_tokens(text: str, counter: str = "code") -> int:
    """Token count under the configured counter.

    "code" counts code-tokenizer tokens; "chars4" is ceil(len/4), a
    byte-pair-style approximation.
    """
    if counter == "code":
        return len(tokenize_code(text))
    if counter == "chars4":
        return math.ceil(len(text) / 4)
    raise ConfigError(f"unknown token counter {counter!r}")


def enforce_token_budget(text: str, budget: int, counter: str = "code"):
    """(token_count, within_budget) for the given text."""
    if budget < 1:
        raise ConfigError(f"budget must be >= 1, got {budget}")
    n = count_tokens(text, counter)
    return n, n <= budget


@dataclass(frozen=True)
class PromptBundle:
    template_id: str
    text: str
    token_count: int
    included_doc_ids: tuple = ()
    truncated: bool = False
    context_truncated: bool = False
    snippet_count: int = 0


def _render(template: PromptTemplate, blocks: list[str], current_code: str) -> str:
    joined = "\n\n".join(blocks)
    placeholder = "{snippets}" if template.id == "similar" else "{knowledge}"
    return (
        template.body.replace(placeholder, joined)
        .replace("{current_code}", current_code)
    )


def _budgeted_bundle(
    template: PromptTemplate,
    blocks: list[tuple[str, str]],  # (doc_id, text)
    current_code: str,
    budget: int,
    counter: str,
) -> PromptBundle:
    """Drop whole blocks from the end until the rendered prompt fits."""
    kept = list(blocks)
    truncated = False
    while True:
        text = _render(template, [b for _, b in kept], current_code)
        n, ok = enforce_token_budget(text, budget, counter)
        if ok:
            return PromptBundle(
                template_id=template.id,
                text=text,
                token_count=n,
                included_doc_ids=tuple(d for d, _ in kept),
                truncated=truncated,
                snippet_count=len(kept),
            )
        if kept:
            kept.pop()
            truncated = True
            continue
        # Context alone exceeds the budget: keep its tail (the code nearest
        # the completion point) and flag the truncation.
        tokens = tokenize_code(current_code)
        keep = max(budget - count_tokens(_render(template, [], ""), counter), 1)
        current_code = " ".join(tokens[-keep:])
        text = _render(template, [], current_code)
        n, _ = enforce_token_budget(text, budget, counter)
        return PromptBundle(
            template_id=template.id,
            text=text,
            token_count=min(n, budget),
            included_doc_ids=(),
            truncated=True,
            context_truncated=True,
            snippet_count=0,
        )


def build_identifier_prompt(
    kind: UnitKind,
    knowledge: list[CodeUnit],
    current_code: str,
    template: PromptTemplate,
    budget: int = DEFAULT_BUDGET,
    counter: str = "code",
) -> PromptBundle:
    """Knowledge blocks first, then the current code, under the token budget."""
    if template.id != kind.value:
        raise TemplateMismatch(
            f"template {template.id!r} does not match kind {kind.value!r}"
        )
    blocks = [(f"{u.origin.project}:{u.origin.path}:{u.origin.start_line}", u.text)
              for u in knowledge]
    return _budgeted_bundle(template, blocks, current_code, budget, counter)


def build_similarity_prompt(
    snippets: list[ScoredSnippet],
    current_code: str,
    template: PromptTemplate,
    budget: int = DEFAULT_BUDGET,
    counter: str = "code",
) -> PromptBundle:
    """Snippets in rank order, lowest ranks dropped first on overflow."""
    if template.id != "similar":
        raise TemplateMismatch(f"similarity prompt needs the 'similar' template")
    ordered = sorted(snippets, key=lambda s: s.rank)
    blocks = [(s.doc_id, s.unit.text) for s in ordered]
    return _budgeted_bundle(template, blocks, current_code, budget, counter)


# ---------------------------------------------------------------------------
# Identifier extraction (model-backed with a static fallback)

@dataclass(frozen=True)
class IdentifierRequest:
    messages: frozenset = frozenset()
    functions: frozenset = frozenset()
    classes: frozenset = frozenset()
    from_fallback: bool = False


_NEED_TO_LOOKUP_PROMPT = """\
You are given an incomplete C++ code snippet. List the external identifiers
whose definitions would help complete it. Reply with only a JSON object:
{"messages": [...], "functions": [...], "classes": [...]}
- "messages": protobuf message type names used but not defined here
- "functions": functions called but not defined or declared here
- "classes": class type names used but not defined here

Code:
```cpp
%s
```
"""

_CPP_RESERVED = {
    "if", "else", "for", "while", "switch", "return", "sizeof", "new",
    "delete", "throw", "catch", "do", "case", "break", "continue",
    "default", "goto", "int", "void", "char", "bool", "float", "double",
    "long", "short", "unsigned", "signed", "auto", "const", "constexpr",
    "static", "inline", "virtual", "class", "struct", "enum", "union",
    "namespace", "template", "typename", "public", "private", "protected",
    "true", "false", "nullptr", "this", "operator", "using", "typedef",
    "std",
}


def _static_need_to_lookup(current_code: str, identifier_store=None) -> IdentifierRequest:
    """Heuristic fallback: undefined called names and capitalized type names."""
    code, _, macros = scan_directives(current_code)
    tokens = tokenize(code)
    defined = {m.name for m in macros}
    called = []
    type_names = []
    for i, tok in enumerate(tokens):
        if tok.kind != "id" or tok.value in _CPP_RESERVED:
            continue
        nxt = tokens[i + 1] if i + 1 < len(tokens) else None
        prv = tokens[i - 1] if i > 0 else None
        if nxt is not None and nxt.value == "(":
            # A name introduced with a return type here is a local definition.
            if prv is not None and prv.kind == "id":
                defined.add(tok.value)
            else:
                called.append(tok.value)
        elif (
            tok.value[0].isupper()
            and nxt is not None
            and (nxt.kind == "id" or nxt.value in ("&", "*", "<", "::"))
        ):
            type_names.append(tok.value)

    messages, functions, classes = set(), set(), set()
    for name in type_names:
        if identifier_store is not None and identifier_store.lookup(
            name, UnitKind.MSG_DEF
        ):
            messages.add(name)
        else:
            classes.add(name)
    for name in called:
        if name in defined or name in classes or name in messages:
            continue
        functions.add(name)
    return IdentifierRequest(
        messages=frozenset(messages),
        functions=frozenset(functions - messages - classes),
        classes=frozenset(classes - messages),
        from_fallback=True,
    )


def _parse_identifier_reply(reply: str) -> IdentifierRequest | None:
    match = re.search(r"\{.*\}", reply, flags=re.DOTALL)
    if not match:
        return None
    try:
        obj = json.loads(match.group())
    except json.JSONDecodeError:
        return None
    if not isinstance(obj, dict):
        return None
    sets = {}
    for key in ("messages", "functions", "classes"):
        value = obj.get(key, [])
        if not isinstance(value, list) or not all(
            isinstance(v, str) for v in value
        ):
            return None
        sets[key] = set(value)
    messages = sets["messages"]
    classes = sets["classes"] - messages
    functions = sets["functions"] - messages - classes
    return IdentifierRequest(
        messages=frozenset(messages),
        functions=frozenset(functions),
        classes=frozenset(classes),
    )


def need_to_lookup(current_code: str, client, identifier_store=None) -> IdentifierRequest:
    """Ask the model which identifiers need definitions; fall back statically.

    Malformed model output is retried once; a second failure or an
    unavailable endpoint yields the heuristic result, flagged.
    """
    prompt = _NEED_TO_LOOKUP_PROMPT % current_code
    for _ in range(2):
        try:
            reply = client.chat([{"role": "user", "content": prompt}])
        except (LlmUnavailable, LlmHttpError):
            break
        request = _parse_identifier_reply(reply)
        if request is not None:
            return request
    return _static_need_to_lookup(current_code, identifier_store)


# ---------------------------------------------------------------------------
# Chat clients and completion records

@dataclass(frozen=True)
class ClientConfig:
    endpoint: str | None = None
    model: str = "mock"
    temperature: float = 0.0
    api_key_env: str = "CCRAG_CHAT_TOKEN"
    timeout: float = 60.0
    max_retries: int = 3
    log_path: str | None = None


class MockChatClient:
    """Deterministic offline client; responder maps message text to a reply."""

    def __init__(self, responder):
        if callable(responder):
            self._responder = responder
        else:
            canned = str(responder)
            self._responder = lambda _prompt: canned
        self.calls = 0

    def chat(self, messages) -> str:
        self.calls += 1
        return self._responder(messages[-1]["content"])


class HttpChatClient:
    """Chat-completions style HTTP client with bounded retries."""

    def __init__(self, config: ClientConfig):
        if not config.endpoint:
            raise ConfigError("chat client requires an endpoint")
        self.config = config
        self.retries_used = 0

    def chat(self, messages) -> str:
        cfg = self.config
        headers = {"Content-Type": "application/json"}
        token = os.environ.get(cfg.api_key_env)
        if token:
            headers["Authorization"] = f"Bearer {token}"
        payload = {
            "model": cfg.model,
            "messages": messages,
            "temperature": cfg.temperature,
        }
        last_error = None
        for attempt in range(cfg.max_retries):
            try:
                resp = requests.post(
                    cfg.endpoint, json=payload, headers=headers,
                    timeout=cfg.timeout,
                )
            except requests.Timeout as exc:
                raise TimeoutError(str(exc))
            except requests.RequestException as exc:
                raise LlmUnavailable(str(exc))
            if resp.status_code == 200:
                self._log(payload, resp)
                body = resp.json()
                return body["choices"][0]["message"]["content"]
            last_error = LlmHttpError(
                f"chat endpoint returned {resp.status_code}",
                status=resp.status_code,
            )
            if resp.status_code not in (429, 500, 502, 503, 504):
                raise last_error
            self.retries_used += 1
            retry_after = resp.headers.get("Retry-After")
            delay = float(retry_after) if retry_after else 0.2 * 2 ** attempt
            time.sleep(min(delay, 5.0))
        raise last_error

    def _log(self, payload, resp):
        if not self.config.log_path:
            return
        entry = {"request": dict(payload), "response": resp.json()}
        with Path(self.config.log_path).open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(entry, ensure_ascii=False) + "\n")


@dataclass(frozen=True)
class CompletionRecord:
    example_id: str
    technique: str
    mode: str
    bundle: PromptBundle
    generated_code: str
    model: str
    latency_s: float
    retries: int = 0
    fallback_used: bool = False
    error: str | None = None


_FENCE_RE = re.compile(r"```[^\n]*\n(.*?)```", re.DOTALL)


def extract_code_block(reply: str) -> str:
    """First fenced block, else the longest brace-balanced region, else raw."""
    m = _FENCE_RE.search(reply)
    if m:
        return m.group(1).strip("\n")
    best = None
    depth = 0
    start = None
    for i, ch in enumerate(reply):
        if ch == "{":
            if depth == 0:
                start = reply.rfind("\n", 0, i) + 1
            depth += 1
        elif ch == "}" and depth > 0:
            depth -= 1
            if depth == 0 and start is not None:
                candidate = reply[start:i + 1]
                if best is None or len(candidate) > len(best):
                    best = candidate
    if best is not None:
        return best.strip()
    return reply.strip()


def complete(
    bundle: PromptBundle,
    client,
    example_id: str = "",
    technique: str = "base",
    mode: str = "incomplete-context",
    model: str = "mock",
) -> CompletionRecord:
    """One chat call for one prompt bundle; code block extracted from the reply."""
    start = time.monotonic()
    reply = client.chat([{"role": "user", "content": bundle.text}])
    latency = time.monotonic() - start
    return CompletionRecord(
        example_id=example_id,
        technique=technique,
        mode=mode,
        bundle=bundle,
        generated_code=extract_code_block(reply),
        model=model,
        latency_s=latency,
        retries=getattr(client, "retries_used", 0),
    )
