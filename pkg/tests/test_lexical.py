"""BM25 index tests, including a brute-force scoring oracle."""

import math
import random
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_unit
from ccrag.errors import ConfigError, EmptyIndex
from ccrag.lexical import (
    build_lexical_index,
    bm25_score,
    doc_id_for,
    load_lexical_index,
    save_lexical_index,
    search_lexical,
    tokenize_code,
)
from ccrag.units import UnitKind

WORDS = [
    "get", "set", "user", "name", "value", "key", "table", "send", "recv",
    "open", "close", "conn", "retry", "parse", "encode", "decode", "buf",
    "size", "index", "count", "hash", "node", "list", "push", "pop",
]


def brute_force_bm25(query, doc_texts, k1=1.2, b=0.75):
    """Reference ranking computed directly from the scoring definition."""
    lens = {d: len(tokenize_code(t)) for d, t in doc_texts.items()}
    n = len(doc_texts)
    avg = sum(lens.values()) / n
    df = Counter()
    for text in doc_texts.values():
        df.update(set(tokenize_code(text)))
    query_tokens = tokenize_code(query)
    scored = []
    for doc_id, text in doc_texts.items():
        tf = Counter(tokenize_code(text))
        score = 0.0
        for term in query_tokens:
            if tf[term] == 0:
                continue
            idf = max(0.0, math.log((n - df[term] + 0.5) / (df[term] + 0.5)))
            score += idf * (tf[term] * (k1 + 1)) / (
                tf[term] + k1 * (1 - b + b * (lens[doc_id] / avg))
            )
        if score > 0:
            scored.append((doc_id, score))
    scored.sort(key=lambda p: (-p[1], p[0]))
    return scored


def _random_corpus(rng, n):
    units = []
    for i in range(n):
        words = rng.choices(WORDS, k=rng.randint(4, 20))
        units.append(
            make_unit(f"fn{i}", " ".join(words), path="toy.cpp", line=i * 10 + 1)
        )
    return units


class TestTokenizeCode:
    def test_camel_and_call(self):
        assert tokenize_code("getUserName(id)") == ["get", "user", "name", "id"]

    def test_underscores(self):
        assert tokenize_code("get_user_name") == ["get", "user", "name"]

    def test_duplicates_preserved(self):
        assert tokenize_code("x + x + x") == ["x", "x", "x"]

    def test_empty(self):
        assert tokenize_code("  \n\t") == []


class TestOracleEquivalence:
    def test_random_queries_match_brute_force(self):
        rng = random.Random(7)
        units = _random_corpus(rng, 50)
        index = build_lexical_index(units)
        doc_texts = {doc_id_for(u): u.text for u in units}
        for _ in range(100):
            query = " ".join(rng.choices(WORDS, k=rng.randint(1, 8)))
            expected = brute_force_bm25(query, doc_texts)
            got = search_lexical(query, 50, index)
            assert [d for d, _ in got] == [d for d, _ in expected]
            for (_, a), (_, e) in zip(got, expected):
                assert abs(a - e) < 1e-9


class TestAnalyticValues:
    def test_idf_zero_when_term_in_one_of_two_docs(self):
        units = [
            make_unit("a", "alpha beta", line=1),
            make_unit("b", "gamma beta", line=5),
        ]
        index = build_lexical_index(units)
        assert index.idf("alpha") == 0.0

    def test_idf_value_three_docs(self):
        units = [
            make_unit("a", "alpha beta", line=1),
            make_unit("b", "gamma beta", line=5),
            make_unit("c", "delta beta", line=9),
        ]
        index = build_lexical_index(units)
        assert abs(index.idf("alpha") - math.log(2.5 / 1.5)) < 1e-12

    def test_tf_mod_is_one_at_average_length(self):
        # Equal-length docs, tf=1: the saturation term reduces to 1, so the
        # per-term contribution equals the IDF alone.
        units = [
            make_unit("a", "alpha beta", line=1),
            make_unit("b", "gamma beta", line=5),
            make_unit("c", "delta beta", line=9),
        ]
        index = build_lexical_index(units)
        score = bm25_score(["alpha"], doc_id_for(units[0]), index)
        assert abs(score - index.idf("alpha")) < 1e-12

    def test_raw_idf_allows_negative(self):
        units = [
            make_unit("a", "beta", line=1),
            make_unit("b", "beta", line=5),
        ]
        floored = build_lexical_index(units)
        raw = build_lexical_index(units, raw_idf=True)
        assert floored.idf("beta") == 0.0
        assert raw.idf("beta") < 0.0


class TestSearch:
    def test_ties_broken_by_ascending_doc_id(self):
        # "alpha" in 2 of 5 docs keeps its IDF positive; the two identical
        # docs tie exactly and must come back in doc_id order.
        units = [
            make_unit("b", "alpha beta", path="z.cpp", line=1),
            make_unit("a", "alpha beta", path="a.cpp", line=1),
            make_unit("c", "other words", path="m.cpp", line=1),
            make_unit("d", "more words", path="n.cpp", line=1),
            make_unit("e", "still words", path="o.cpp", line=1),
        ]
        index = build_lexical_index(units)
        got = search_lexical("alpha", 2, index)
        assert [d for d, _ in got] == ["synthetic:a.cpp:1", "synthetic:z.cpp:1"]
        assert got[0][1] == got[1][1]

    def test_zero_scores_excluded(self):
        units = [
            make_unit("a", "alpha beta", line=1),
            make_unit("b", "gamma delta", line=5),
        ]
        index = build_lexical_index(units)
        assert search_lexical("unseen", 5, index) == []

    def test_only_func_defs_indexed(self):
        units = [
            make_unit("a", "alpha beta", line=1),
            make_unit("K", "class K { alpha };", kind=UnitKind.CLASS_DEF, line=5),
        ]
        index = build_lexical_index(units)
        assert index.n_docs == 1

    def test_empty_index_raises(self):
        index = build_lexical_index([])
        with pytest.raises(EmptyIndex):
            search_lexical("alpha", 1, index)

    def test_bad_k_raises(self):
        index = build_lexical_index([make_unit("a", "alpha", line=1)])
        with pytest.raises(ConfigError):
            search_lexical("alpha", 0, index)

    def test_bad_params_raise(self):
        with pytest.raises(ConfigError):
            build_lexical_index([make_unit("a", "alpha", line=1)], k=0)
        with pytest.raises(ConfigError):
            build_lexical_index([make_unit("a", "alpha", line=1)], b=1.5)


@settings(max_examples=50, deadline=None)
@given(
    texts=st.lists(
        st.lists(st.sampled_from(WORDS), min_size=1, max_size=10),
        min_size=1,
        max_size=8,
    ),
    query=st.lists(st.sampled_from(WORDS), min_size=1, max_size=5),
)
def test_search_properties(texts, query):
    units = [
        make_unit(f"f{i}", " ".join(words), line=i * 10 + 1)
        for i, words in enumerate(texts)
    ]
    index = build_lexical_index(units)
    results = search_lexical(" ".join(query), 4, index)
    assert len(results) <= 4
    scores = [s for _, s in results]
    assert scores == sorted(scores, reverse=True)
    assert all(s > 0 for s in scores)


def test_save_load_roundtrip(tmp_path):
    rng = random.Random(3)
    units = _random_corpus(rng, 12)
    index = build_lexical_index(units)
    save_lexical_index(index, tmp_path / "lex.json")
    loaded = load_lexical_index(tmp_path / "lex.json")
    for _ in range(10):
        query = " ".join(rng.choices(WORDS, k=4))
        assert search_lexical(query, 5, loaded) == search_lexical(query, 5, index)


def test_missing_file_raises(tmp_path):
    with pytest.raises(ConfigError):
        load_lexical_index(tmp_path / "absent.json")
