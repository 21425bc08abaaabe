from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def mini_repos(fixtures_dir) -> dict:
    return {
        "repo_plain": fixtures_dir / "repo_plain",
        "repo_cycle": fixtures_dir / "repo_cycle",
        "repo_protomacro": fixtures_dir / "repo_protomacro",
    }


@pytest.fixture(scope="session")
def fixture_corpus(tmp_path_factory, mini_repos):
    """Corpus built once over the three extraction mini-repos."""
    from ccrag.extraction import build_corpus

    out = tmp_path_factory.mktemp("corpus") / "corpus.jsonl"
    units, stats = build_corpus(sorted(mini_repos.values()), out)
    return {"units": units, "stats": stats, "path": out}


def make_unit(
    identifier: str,
    text: str,
    kind=None,
    path: str = "synthetic.cpp",
    line: int = 1,
    project: str = "synthetic",
):
    """One corpus unit for index tests without running extraction."""
    from ccrag.units import CodeUnit, Origin, UnitKind

    return CodeUnit(
        kind=kind or UnitKind.FUNC_DEF,
        identifier=identifier,
        qualified_name=identifier,
        text=text,
        origin=Origin(
            path=path,
            start_line=line,
            end_line=line + max(text.count("\n"), 0),
            project=project,
        ),
    )


@pytest.fixture(scope="session")
def bench_env(fixtures_dir):
    """Benchmark corpus, all three indexes, and the loaded examples."""
    from ccrag.extraction import build_corpus
    from ccrag.harness import load_benchmark
    from ccrag.identifier_index import build_identifier_index
    from ccrag.lexical import build_lexical_index
    from ccrag.retrieval import Indices
    from ccrag.semantic import EmbedderSpec, build_semantic_index

    units, stats = build_corpus([fixtures_dir / "repo_bench"])
    spec = EmbedderSpec()
    indices = Indices(
        lexical=build_lexical_index(units),
        semantic=build_semantic_index(units, spec),
        embedder=spec,
        identifier=build_identifier_index(units),
    )
    benchmark = load_benchmark(fixtures_dir / "benchmark.jsonl")
    return {
        "units": units,
        "stats": stats,
        "indices": indices,
        "benchmark": benchmark,
    }
