"""Code tokenization and BM25 inverted index over function definitions."""

from __future__ import annotations

import json
import math
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError, EmptyIndex
from .units import CodeUnit, UnitKind, units_hash

_SPLIT_RE = re.compile(r"[^0-9A-Za-z]+")
_CAMEL_RE = re.compile(r"(?<=[a-z0-9])(?=[A-Z])")

DEFAULT_K = 1.2
DEFAULT_B = 0.75


def tokenize_code(text: str) -> list[str]:
    """Split code into lowercase terms.

    Non-alphanumeric boundaries first, then underscores and lower-to-upper
    camel transitions inside identifiers; empty fragments dropped.
    Duplicates are preserved so term frequencies survive.
    """
    tokens = []
    for chunk in _SPLIT_RE.split(text):
        if not chunk:
            continue
        for part in chunk.split("_"):
            for piece in _CAMEL_RE.split(part):
                if piece:
                    tokens.append(piece.lower())
    return tokens


@dataclass
class LexicalIndex:
    """BM25 postings over func-def units."""

    k: float = DEFAULT_K
    b: float = DEFAULT_B
    raw_idf: bool = False  # keep Eq.-verbatim negative IDF when True
    postings: dict = field(default_factory=dict)  # term -> [(doc_id, tf)]
    doc_freq: dict = field(default_factory=dict)  # term -> df
    doc_len: dict = field(default_factory=dict)  # doc_id -> token count
    docs: dict = field(default_factory=dict)  # doc_id -> CodeUnit
    corpus_hash: str | None = None

    def __post_init__(self):
        if self.k <= 0:
            raise ConfigError(f"k must be > 0, got {self.k}")
        if not 0 <= self.b <= 1:
            raise ConfigError(f"b must be in [0, 1], got {self.b}")

    @property
    def n_docs(self) -> int:
        return len(self.doc_len)

    @property
    def avg_len(self) -> float:
        if not self.doc_len:
            return 0.0
        return sum(self.doc_len.values()) / len(self.doc_len)

    def idf(self, term: str) -> float:
        df = self.doc_freq.get(term, 0)
        raw = math.log((self.n_docs - df + 0.5) / (df + 0.5))
        return raw if self.raw_idf else max(0.0, raw)


def doc_id_for(unit: CodeUnit) -> str:
    o = unit.origin
    return f"{o.project}:{o.path}:{o.start_line}"


def build_lexical_index(
    corpus: list[CodeUnit],
    k: float = DEFAULT_K,
    b: float = DEFAULT_B,
    raw_idf: bool = False,
) -> LexicalIndex:
    """Index func-def units only; deterministic for fixed input."""
    index = LexicalIndex(k=k, b=b, raw_idf=raw_idf)
    func_defs = [u for u in corpus if u.kind is UnitKind.FUNC_DEF]
    for unit in func_defs:
        doc_id = doc_id_for(unit)
        tokens = tokenize_code(unit.text)
        index.docs[doc_id] = unit
        index.doc_len[doc_id] = len(tokens)
        for term, tf in sorted(Counter(tokens).items()):
            index.postings.setdefault(term, []).append((doc_id, tf))
    index.doc_freq = {t: len(p) for t, p in index.postings.items()}
    index.corpus_hash = units_hash(corpus)
    return index


def bm25_score(query_tokens: list[str], doc_id: str, index: LexicalIndex) -> float:
    """Sum of IDF * saturated, length-normalized TF over query terms."""
    if index.n_docs == 0:
        raise EmptyIndex("lexical index has no documents")
    tfs = {t: tf for t, postings in index.postings.items() for d, tf in postings if d == doc_id}
    return _score_from_tfs(query_tokens, tfs, index.doc_len.get(doc_id, 0), index)


def _score_from_tfs(query_tokens, tfs, doc_len, index) -> float:
    avg = index.avg_len
    norm = index.k * (1 - index.b + index.b * (doc_len / avg if avg else 0.0))
    score = 0.0
    for term in query_tokens:
        tf = tfs.get(term, 0)
        if tf == 0:
            continue
        score += index.idf(term) * (tf * (index.k + 1)) / (tf + norm)
    return score


def search_lexical(query: str, k: int, index: LexicalIndex):
    """Top-k documents by BM25 score, ties broken by ascending doc_id.

    Returns [(doc_id, score)] with zero-scoring docs excluded.
    """
    if index.n_docs == 0:
        raise EmptyIndex("lexical index has no documents")
    if k < 1:
        raise ConfigError(f"k must be >= 1, got {k}")
    query_tokens = tokenize_code(query)
    accum: dict[str, dict[str, int]] = {}
    for term in set(query_tokens):
        for doc_id, tf in index.postings.get(term, ()):
            accum.setdefault(doc_id, {})[term] = tf
    scored = []
    for doc_id, tfs in accum.items():
        s = _score_from_tfs(query_tokens, tfs, index.doc_len[doc_id], index)
        if s > 0 or (index.raw_idf and s != 0):
            scored.append((doc_id, s))
    scored.sort(key=lambda pair: (-pair[1], pair[0]))
    return scored[:k]


def save_lexical_index(index: LexicalIndex, path: str | Path) -> None:
    payload = {
        "type": "lexical-index",
        "params": {"k": index.k, "b": index.b, "raw_idf": index.raw_idf},
        "corpus_hash": index.corpus_hash,
        "postings": index.postings,
        "doc_len": index.doc_len,
        "docs": {d: u.to_record() for d, u in index.docs.items()},
    }
    Path(path).write_text(
        json.dumps(payload, ensure_ascii=False), encoding="utf-8"
    )


def load_lexical_index(path: str | Path) -> LexicalIndex:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"no lexical index at {path}")
    payload = json.loads(path.read_text(encoding="utf-8"))
    params = payload["params"]
    index = LexicalIndex(
        k=params["k"], b=params["b"], raw_idf=params.get("raw_idf", False)
    )
    index.postings = {
        t: [(d, tf) for d, tf in entries]
        for t, entries in payload["postings"].items()
    }
    index.doc_freq = {t: len(p) for t, p in index.postings.items()}
    index.doc_len = dict(payload["doc_len"])
    index.docs = {
        d: CodeUnit.from_record(r) for d, r in payload["docs"].items()
    }
    index.corpus_hash = payload.get("corpus_hash")
    return index
