"""Embedding-based retrieval over function definitions.

Two embedders behind one interface: a deterministic hashed token-n-gram
embedder for offline work, and a client for remote embeddings services
speaking the prevailing {model, input} -> {data: [{embedding}]} shape.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import requests

from .errors import (
    ConfigError,
    DimensionMismatch,
    EmbeddingServiceError,
    EmptyIndex,
    EmptyInput,
    FingerprintMismatch,
    ZeroVector,
)
from .lexical import doc_id_for, tokenize_code
from .units import CodeUnit, UnitKind, units_hash

DEFAULT_DIM = 4096
DEFAULT_NGRAM_ORDER = 3
DEFAULT_CHAR_CAP = 8000
DEFAULT_MAX_RETRIES = 3


@dataclass(frozen=True)
class EmbedderSpec:
    kind: str = "builtin-hash"  # or "remote"
    dim: int = DEFAULT_DIM
    ngram_order: int = DEFAULT_NGRAM_ORDER
    endpoint: str | None = None
    model: str | None = None
    api_key_env: str = "CCRAG_EMBED_TOKEN"
    char_cap: int = DEFAULT_CHAR_CAP

    def fingerprint(self) -> str:
        if self.kind == "builtin-hash":
            key = f"builtin-hash:dim={self.dim}:order={self.ngram_order}"
        else:
            key = f"remote:model={self.model}:dim={self.dim}"
        return hashlib.sha256(key.encode()).hexdigest()[:16]


def _bucket(ngram: tuple[str, ...], dim: int) -> int:
    digest = hashlib.md5("\x1f".join(ngram).encode()).digest()
    return int.from_bytes(digest[:8], "big") % dim


def hashed_features(text: str, spec: EmbedderSpec) -> dict[int, float]:
    """Bucketed n-gram term frequencies; the raw vector before normalization."""
    tokens = tokenize_code(text[: spec.char_cap])
    if not tokens:
        raise EmptyInput("no tokens to embed")
    counts: dict[int, float] = {}
    for order in range(1, spec.ngram_order + 1):
        for i in range(len(tokens) - order + 1):
            b = _bucket(tuple(tokens[i:i + order]), spec.dim)
            counts[b] = counts.get(b, 0.0) + 1.0
    return counts


def embed(text: str, spec: EmbedderSpec) -> np.ndarray:
    """L2-normalized embedding of text under the given spec."""
    if spec.kind == "builtin-hash":
        vec = np.zeros(spec.dim, dtype=np.float64)
        for bucket, count in hashed_features(text, spec).items():
            vec[bucket] += count
    elif spec.kind == "remote":
        vec = np.asarray(_embed_remote([text], spec)[0], dtype=np.float64)
    else:
        raise ConfigError(f"unknown embedder kind {spec.kind!r}")
    norm = float(np.linalg.norm(vec))
    if norm == 0.0:
        raise EmptyInput("embedding collapsed to the zero vector")
    return vec / norm


def _embed_remote(texts: list[str], spec: EmbedderSpec, max_retries: int = DEFAULT_MAX_RETRIES):
    import os

    if not spec.endpoint:
        raise ConfigError("remote embedder requires an endpoint")
    headers = {"Content-Type": "application/json"}
    token = os.environ.get(spec.api_key_env)
    if token:
        headers["Authorization"] = f"Bearer {token}"
    payload = {"model": spec.model, "input": [t[: spec.char_cap] for t in texts]}
    last_exc = None
    for attempt in range(max_retries):
        try:
            resp = requests.post(
                spec.endpoint, json=payload, headers=headers, timeout=30
            )
        except requests.RequestException as exc:
            last_exc = EmbeddingServiceError(str(exc))
        else:
            if resp.status_code == 200:
                data = resp.json()["data"]
                return [item["embedding"] for item in data]
            last_exc = EmbeddingServiceError(
                f"embedding endpoint returned {resp.status_code}",
                status=resp.status_code,
                body_excerpt=resp.text[:200],
            )
            if resp.status_code < 500 and resp.status_code != 429:
                break
        time.sleep(min(2 ** attempt * 0.1, 2.0))
    raise last_exc


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    if a.shape != b.shape:
        raise DimensionMismatch(f"{a.shape} vs {b.shape}")
    na, nb = float(np.linalg.norm(a)), float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise ZeroVector("cosine undefined for zero-norm vectors")
    return float(np.dot(a, b) / (na * nb))


@dataclass
class VectorStore:
    """Embeddings for func-def units plus the fingerprint that made them."""

    spec_fingerprint: str
    dim: int
    doc_ids: list = field(default_factory=list)
    matrix: np.ndarray | None = None  # rows aligned with doc_ids
    docs: dict = field(default_factory=dict)  # doc_id -> CodeUnit
    corpus_hash: str | None = None
    spec_record: dict | None = None  # EmbedderSpec kwargs for query embedding

    def __len__(self) -> int:
        return len(self.doc_ids)


def build_semantic_index(corpus: list[CodeUnit], spec: EmbedderSpec) -> VectorStore:
    """One embedding per func-def unit; empty store for corpora without any."""
    func_defs = [u for u in corpus if u.kind is UnitKind.FUNC_DEF]
    store = VectorStore(spec_fingerprint=spec.fingerprint(), dim=spec.dim)
    store.spec_record = asdict(spec)
    rows = []
    for unit in func_defs:
        doc_id = doc_id_for(unit)
        try:
            vec = embed(unit.text, spec)
        except EmptyInput:
            continue
        store.doc_ids.append(doc_id)
        store.docs[doc_id] = unit
        rows.append(vec)
    store.matrix = (
        np.vstack(rows) if rows else np.zeros((0, spec.dim), dtype=np.float64)
    )
    store.corpus_hash = units_hash(corpus)
    return store


def search_semantic(query: str, k: int, store: VectorStore, spec: EmbedderSpec):
    """Top-k by cosine via exhaustive scan; ties broken by ascending doc_id.

    Returns [(doc_id, score)].
    """
    if spec.fingerprint() != store.spec_fingerprint:
        raise FingerprintMismatch(
            f"store built with {store.spec_fingerprint}, "
            f"queried with {spec.fingerprint()}"
        )
    if len(store) == 0:
        raise EmptyIndex("semantic store has no vectors")
    if k < 1:
        raise ConfigError(f"k must be >= 1, got {k}")
    qvec = embed(query, spec)
    # Rows are unit-norm, so a plain dot product is the cosine. Row-wise
    # dots, not one matmul: blocked matmul accumulation can differ in the
    # last ulp and flip tie-breaks against a row-wise reference scan.
    scores = [float(np.dot(store.matrix[i], qvec)) for i in range(len(store))]
    order = sorted(
        range(len(store.doc_ids)),
        key=lambda i: (-float(scores[i]), store.doc_ids[i]),
    )
    return [(store.doc_ids[i], float(scores[i])) for i in order[:k]]


def save_semantic_index(store: VectorStore, directory: str | Path) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    np.save(directory / "vectors.npy", store.matrix)
    manifest = {
        "type": "semantic-index",
        "spec_fingerprint": store.spec_fingerprint,
        "dim": store.dim,
        "corpus_hash": store.corpus_hash,
        "spec": store.spec_record,
        "doc_ids": store.doc_ids,
    }
    (directory / "manifest.json").write_text(
        json.dumps(manifest, indent=2) + "\n", encoding="utf-8"
    )
    with (directory / "docs.jsonl").open("w", encoding="utf-8") as fh:
        for doc_id in store.doc_ids:
            fh.write(
                json.dumps(store.docs[doc_id].to_record(), ensure_ascii=False)
                + "\n"
            )


def load_semantic_index(directory: str | Path) -> VectorStore:
    directory = Path(directory)
    manifest_path = directory / "manifest.json"
    if not manifest_path.is_file():
        raise ConfigError(f"no semantic index at {directory}")
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    store = VectorStore(
        spec_fingerprint=manifest["spec_fingerprint"], dim=manifest["dim"]
    )
    store.doc_ids = list(manifest["doc_ids"])
    store.corpus_hash = manifest.get("corpus_hash")
    store.spec_record = manifest.get("spec")
    store.matrix = np.load(directory / "vectors.npy")
    units = [
        CodeUnit.from_record(json.loads(line))
        for line in (directory / "docs.jsonl")
        .read_text(encoding="utf-8")
        .splitlines()
        if line.strip()
    ]
    store.docs = dict(zip(store.doc_ids, units))
    return store
