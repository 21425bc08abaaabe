"""Unified retrieval dispatch, hybrid fusion, and overlap analysis."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError, ExampleSetMismatch, UnknownTechnique
from .lexical import LexicalIndex, search_lexical
from .semantic import EmbedderSpec, VectorStore, search_semantic
from .units import CodeUnit

TECHNIQUES = ("bm25", "semantic", "hybrid")
MODES = ("incomplete-context", "complete-snippet")

DEFAULT_K = 4


@dataclass(frozen=True)
class RetrievalQuery:
    mode: str  # incomplete-context | complete-snippet
    text: str
    example_id: str = ""

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"unknown query mode {self.mode!r}")


@dataclass(frozen=True)
class ScoredSnippet:
    doc_id: str
    unit: CodeUnit
    technique: str
    score: float
    rank: int
    provenance: dict = field(default_factory=dict)


@dataclass(frozen=True)
class RetrievalConfig:
    k: int = DEFAULT_K
    technique: str = "bm25"

    def __post_init__(self):
        if self.k < 1:
            raise ConfigError(f"k must be >= 1, got {self.k}")


@dataclass
class Indices:
    """Whatever indexes a run has built; techniques check for what they need."""

    lexical: LexicalIndex | None = None
    semantic: VectorStore | None = None
    embedder: EmbedderSpec | None = None
    identifier: object | None = None


def _snippets(pairs, technique, docs) -> list[ScoredSnippet]:
    return [
        ScoredSnippet(
            doc_id=doc_id,
            unit=docs[doc_id],
            technique=technique,
            score=score,
            rank=rank,
        )
        for rank, (doc_id, score) in enumerate(pairs, start=1)
    ]


def retrieve(
    query: RetrievalQuery, cfg: RetrievalConfig, indices: Indices
) -> list[ScoredSnippet]:
    """Dispatch to the configured technique; at most cfg.k results."""
    if cfg.technique == "bm25":
        if indices.lexical is None:
            raise ConfigError("bm25 retrieval requires a lexical index")
        pairs = search_lexical(query.text, cfg.k, indices.lexical)
        return _snippets(pairs, "bm25", indices.lexical.docs)
    if cfg.technique == "semantic":
        if indices.semantic is None or indices.embedder is None:
            raise ConfigError("semantic retrieval requires a semantic index")
        pairs = search_semantic(
            query.text, cfg.k, indices.semantic, indices.embedder
        )
        return _snippets(pairs, "semantic", indices.semantic.docs)
    if cfg.technique == "hybrid":
        lex = retrieve(query, RetrievalConfig(cfg.k, "bm25"), indices)
        sem = retrieve(query, RetrievalConfig(cfg.k, "semantic"), indices)
        return hybrid_merge(lex, sem, cfg.k)
    raise UnknownTechnique(cfg.technique)


def hybrid_merge(
    lex: list[ScoredSnippet], sem: list[ScoredSnippet], k: int
) -> list[ScoredSnippet]:
    """Round-robin interleave, lexical first, deduplicating by doc_id.

    Per-technique scores are preserved in each snippet's provenance; output
    ranks are reassigned 1..n and the merged score mirrors the source
    technique's score.
    """
    taken: set[str] = set()
    merged: list[ScoredSnippet] = []
    li = si = 0
    turn_lex = True
    while len(merged) < k and (li < len(lex) or si < len(sem)):
        source, idx = (lex, li) if turn_lex else (sem, si)
        if idx >= len(source):
            turn_lex = not turn_lex
            source, idx = (lex, li) if turn_lex else (sem, si)
            if idx >= len(source):
                break
        snippet = source[idx]
        if turn_lex:
            li += 1
        else:
            si += 1
        turn_lex = not turn_lex
        if snippet.doc_id in taken:
            continue
        taken.add(snippet.doc_id)
        merged.append(
            ScoredSnippet(
                doc_id=snippet.doc_id,
                unit=snippet.unit,
                technique="hybrid",
                score=snippet.score,
                rank=len(merged) + 1,
                provenance={
                    "source": snippet.technique,
                    "source_rank": snippet.rank,
                    "source_score": snippet.score,
                },
            )
        )
    return merged


def overlap_analysis(run_a: dict, run_b: dict) -> dict:
    """Count completely distinct retrieved sets between two runs.

    Each run maps example_id -> list of doc_ids (or ScoredSnippets). An
    example is completely distinct when the two doc_id sets are disjoint.
    """
    if set(run_a) != set(run_b):
        raise ExampleSetMismatch(
            f"example ids differ: {sorted(set(run_a) ^ set(run_b))[:5]}"
        )

    def ids(entry):
        return {
            s.doc_id if isinstance(s, ScoredSnippet) else s for s in entry
        }

    overlaps = {}
    distinct = 0
    for example_id in sorted(run_a):
        a, b = ids(run_a[example_id]), ids(run_b[example_id])
        if len(a) != len(b):
            raise ExampleSetMismatch(
                f"example {example_id}: result counts differ ({len(a)} vs {len(b)})"
            )
        inter = len(a & b)
        overlaps[example_id] = inter
        if inter == 0:
            distinct += 1
    return {"distinct_count": distinct, "per_example_overlap": overlaps}


def write_run(
    path: str | Path,
    example_results: dict,
    technique: str,
    mode: str,
    k: int,
) -> None:
    """Persist per-example retrieval results as line-delimited records."""
    with Path(path).open("w", encoding="utf-8") as fh:
        for example_id in sorted(example_results):
            snippets = example_results[example_id]
            fh.write(
                json.dumps(
                    {
                        "example_id": example_id,
                        "technique": technique,
                        "mode": mode,
                        "k": k,
                        "results": [
                            {"doc_id": s.doc_id, "score": s.score}
                            for s in snippets
                        ],
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )


def read_run(path: str | Path) -> dict:
    results = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        record = json.loads(line)
        results[record["example_id"]] = [
            r["doc_id"] for r in record["results"]
        ]
    return results
