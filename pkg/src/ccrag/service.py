"""HTTP service exposing retrieval and completion over the built indexes."""

from __future__ import annotations

import time

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .completion import build_similarity_prompt, complete, load_template
from .errors import (
    CcragError,
    ConfigError,
    EmptyIndex,
    EmptyInput,
    LlmHttpError,
    LlmUnavailable,
    UnknownTechnique,
)
from .harness import RunConfig, SIMILARITY_TECHNIQUES
from .retrieval import MODES, Indices, RetrievalConfig, RetrievalQuery, retrieve
from .units import UnitKind


def _error(status: int, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": message})


def create_app(
    indices: Indices,
    client=None,
    cfg: RunConfig = RunConfig(),
) -> FastAPI:
    app = FastAPI(title="ccrag", version="1.0")
    started = time.time()

    def _validated_retrieval(body: dict):
        if not isinstance(body, dict):
            raise ConfigError("request body must be a JSON object")
        text = body.get("query")
        if not isinstance(text, str) or not text.strip():
            raise ConfigError("'query' must be a non-empty string")
        technique = body.get("technique", "bm25")
        if technique not in SIMILARITY_TECHNIQUES:
            raise UnknownTechnique(technique)
        mode = body.get("mode", "incomplete-context")
        if mode not in MODES:
            raise ConfigError(f"unknown mode {mode!r}")
        k = body.get("k", cfg.k)
        if not isinstance(k, int) or isinstance(k, bool) or k < 1:
            raise ConfigError(f"k must be a positive integer, got {k!r}")
        query = RetrievalQuery(mode=mode, text=text)
        return query, RetrievalConfig(k=k, technique=technique)

    @app.get("/healthz")
    def healthz():
        return {
            "status": "ok",
            "uptime_s": round(time.time() - started, 3),
            "indexes": {
                "lexical": (
                    {"docs": indices.lexical.n_docs}
                    if indices.lexical is not None
                    else None
                ),
                "semantic": (
                    {"docs": len(indices.semantic.doc_ids)}
                    if indices.semantic is not None
                    else None
                ),
                "identifier": (
                    {
                        kind.value: indices.identifier.key_count(kind)
                        for kind in UnitKind
                    }
                    if indices.identifier is not None
                    else None
                ),
            },
        }

    @app.post("/retrieve")
    async def retrieve_endpoint(request: Request):
        try:
            body = await request.json()
        except Exception:
            return _error(400, "request body must be valid JSON")
        try:
            query, rcfg = _validated_retrieval(body)
            snippets = retrieve(query, rcfg, indices)
        except (ConfigError, UnknownTechnique) as exc:
            missing = "requires" in str(exc) and "index" in str(exc)
            return _error(503 if missing else 400, str(exc))
        except (EmptyIndex, EmptyInput) as exc:
            return _error(400, str(exc))
        return {
            "results": [
                {
                    "doc_id": s.doc_id,
                    "rank": s.rank,
                    "score": s.score,
                    "technique": s.technique,
                    "text": s.unit.text,
                    "provenance": s.provenance,
                }
                for s in snippets
            ]
        }

    @app.post("/complete")
    async def complete_endpoint(request: Request):
        if client is None:
            return _error(503, "no completion model configured")
        try:
            body = await request.json()
        except Exception:
            return _error(400, "request body must be valid JSON")
        try:
            if not isinstance(body, dict):
                raise ConfigError("request body must be a JSON object")
            context = body.get("context")
            if not isinstance(context, str) or not context.strip():
                raise ConfigError("'context' must be a non-empty string")
            technique = body.get("technique", "bm25")
            snippets = []
            if technique != "base":
                query = RetrievalQuery(mode="incomplete-context", text=context)
                snippets = retrieve(
                    query, RetrievalConfig(cfg.k, technique), indices
                )
            template = load_template("similar", cfg.template_lang)
            bundle = build_similarity_prompt(
                snippets, context, template, cfg.budget, cfg.token_counter
            )
            record = complete(
                bundle, client, technique=technique, model=cfg.model
            )
        except (ConfigError, UnknownTechnique) as exc:
            missing = "requires" in str(exc) and "index" in str(exc)
            return _error(503 if missing else 400, str(exc))
        except (LlmUnavailable, TimeoutError) as exc:
            return _error(502, f"completion model unavailable: {exc}")
        except LlmHttpError as exc:
            return _error(502, str(exc))
        except CcragError as exc:
            return _error(400, str(exc))
        return {
            "generated_code": record.generated_code,
            "technique": technique,
            "token_count": record.bundle.token_count,
            "truncated": record.bundle.truncated,
            "included_doc_ids": list(record.bundle.included_doc_ids),
            "latency_s": record.latency_s,
        }

    return app
