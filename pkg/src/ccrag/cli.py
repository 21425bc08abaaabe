"""Command-line entry point: extract, index, retrieve, complete, eval,
report, serve."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .completion import ClientConfig, HttpChatClient, MockChatClient
from .errors import CcragError, ConfigError
from .extraction import build_corpus
from .harness import (
    ALL_TECHNIQUES,
    RunConfig,
    RunReport,
    aggregate_report,
    load_benchmark,
    render_comparison,
    run_pipeline,
)
from .identifier_index import (
    build_identifier_index,
    load_identifier_index,
    save_identifier_index,
)
from .lexical import build_lexical_index, load_lexical_index, save_lexical_index
from .retrieval import (
    Indices,
    RetrievalConfig,
    RetrievalQuery,
    retrieve,
)
from .semantic import (
    EmbedderSpec,
    build_semantic_index,
    load_semantic_index,
    save_semantic_index,
)
from .units import read_corpus

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ccrag",
        description="Retrieval-augmented code completion for C++/protobuf repositories.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="build a code-unit corpus from repositories")
    p.add_argument("roots", nargs="+", help="project root directories")
    p.add_argument("--out", required=True, help="corpus output path (.jsonl)")
    p.add_argument(
        "--skip", action="append", default=[],
        help="extra generated-file glob pattern (repeatable)",
    )

    p = sub.add_parser("index", help="build an index over a corpus")
    p.add_argument("kind", choices=("identifier", "lexical", "semantic"))
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--k1", type=float, default=1.2, help="BM25 k parameter")
    p.add_argument("--b", type=float, default=0.75, help="BM25 b parameter")
    p.add_argument(
        "--raw-idf", action="store_true",
        help="allow negative IDF values instead of flooring at zero",
    )
    p.add_argument("--dim", type=int, default=4096, help="embedding dimension")
    p.add_argument("--embed-endpoint", default=None)
    p.add_argument("--embed-model", default=None)

    p = sub.add_parser("retrieve", help="query the built indexes")
    p.add_argument("--query", required=True)
    p.add_argument("--technique", default="bm25", choices=("bm25", "semantic", "hybrid"))
    p.add_argument("--mode", default="incomplete-context",
                   choices=("incomplete-context", "complete-snippet"))
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--lexical-index", default=None)
    p.add_argument("--semantic-index", default=None)

    p = sub.add_parser("complete", help="one completion for a context file")
    p.add_argument("--context", required=True, help="file holding the incomplete code")
    p.add_argument("--technique", default="bm25", choices=ALL_TECHNIQUES)
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--budget", type=int, default=2048)
    p.add_argument("--lang", default="en", choices=("en", "zh"))
    p.add_argument("--lexical-index", default=None)
    p.add_argument("--semantic-index", default=None)
    p.add_argument("--identifier-index", default=None)
    p.add_argument("--llm-endpoint", default=None)
    p.add_argument("--llm-model", default="chat")
    p.add_argument("--mock-reply", default=None,
                   help="canned reply for offline runs instead of an endpoint")

    p = sub.add_parser("eval", help="run a benchmark end to end and score it")
    p.add_argument("--benchmark", required=True)
    p.add_argument("--technique", default="bm25", choices=ALL_TECHNIQUES)
    p.add_argument("--mode", default="incomplete-context",
                   choices=("incomplete-context", "complete-snippet"))
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--budget", type=int, default=2048)
    p.add_argument("--lang", default="en", choices=("en", "zh"))
    p.add_argument("--lexical-index", default=None)
    p.add_argument("--semantic-index", default=None)
    p.add_argument("--identifier-index", default=None)
    p.add_argument("--llm-endpoint", default=None)
    p.add_argument("--llm-model", default="chat")
    p.add_argument("--mock-reply", default=None)
    p.add_argument("--out", required=True, help="report output path (.json)")

    p = sub.add_parser("report", help="render a comparison table from run reports")
    p.add_argument("reports", nargs="+", help="report JSON files from 'eval'")

    p = sub.add_parser("serve", help="start the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--lexical-index", default=None)
    p.add_argument("--semantic-index", default=None)
    p.add_argument("--identifier-index", default=None)
    p.add_argument("--llm-endpoint", default=None)
    p.add_argument("--llm-model", default="chat")
    p.add_argument("--mock-reply", default=None)
    return parser


def _load_indices(args) -> Indices:
    indices = Indices()
    if getattr(args, "lexical_index", None):
        indices.lexical = load_lexical_index(args.lexical_index)
    if getattr(args, "semantic_index", None):
        indices.semantic = load_semantic_index(args.semantic_index)
        record = indices.semantic.spec_record or {"dim": indices.semantic.dim}
        indices.embedder = EmbedderSpec(**record)
    if getattr(args, "identifier_index", None):
        indices.identifier = load_identifier_index(args.identifier_index)
    return indices


def _make_client(args):
    if getattr(args, "mock_reply", None) is not None:
        return MockChatClient(args.mock_reply)
    if getattr(args, "llm_endpoint", None):
        return HttpChatClient(
            ClientConfig(endpoint=args.llm_endpoint, model=args.llm_model)
        )
    raise ConfigError("provide --llm-endpoint or --mock-reply")


def _cmd_extract(args) -> int:
    units, stats = build_corpus(
        args.roots, out_path=args.out, extra_generated_patterns=tuple(args.skip)
    )
    print(f"wrote {len(units)} units to {args.out}")
    print(
        f"files={stats.files_seen} parse_failures={stats.parse_failures} "
        f"unresolved_includes={stats.unresolved_includes} "
        f"duplicates_dropped={stats.duplicate_units_dropped}"
    )
    return EXIT_OK


def _cmd_index(args) -> int:
    corpus = read_corpus(args.corpus)
    if args.kind == "identifier":
        store = build_identifier_index(corpus)
        save_identifier_index(store, args.out)
    elif args.kind == "lexical":
        index = build_lexical_index(
            corpus, k=args.k1, b=args.b, raw_idf=args.raw_idf
        )
        save_lexical_index(index, args.out)
    else:
        spec_kwargs = {"dim": args.dim}
        if args.embed_endpoint:
            spec_kwargs.update(
                kind="remote", endpoint=args.embed_endpoint,
                model=args.embed_model or "embed",
            )
        spec = EmbedderSpec(**spec_kwargs)
        store = build_semantic_index(corpus, spec)
        save_semantic_index(store, args.out)
    print(f"built {args.kind} index at {args.out}")
    return EXIT_OK


def _cmd_retrieve(args) -> int:
    indices = _load_indices(args)
    query = RetrievalQuery(mode=args.mode, text=args.query)
    snippets = retrieve(
        query, RetrievalConfig(k=args.k, technique=args.technique), indices
    )
    for s in snippets:
        print(json.dumps(
            {"rank": s.rank, "doc_id": s.doc_id, "score": s.score,
             "provenance": s.provenance},
            ensure_ascii=False,
        ))
    return EXIT_OK


def _run_cfg(args) -> RunConfig:
    return RunConfig(
        k=args.k,
        budget=args.budget,
        template_lang=args.lang,
        model=getattr(args, "llm_model", "mock")
        if getattr(args, "mock_reply", None) is None else "mock",
    )


def _cmd_complete(args) -> int:
    from .harness import BenchmarkExample, _build_prompt
    from .completion import complete as run_complete

    context = Path(args.context).read_text(encoding="utf-8")
    indices = _load_indices(args)
    client = _make_client(args)
    cfg = _run_cfg(args)
    example = BenchmarkExample(
        id="cli", domain="utils", difficulty="easy",
        context=context, ground_truth="-",
    )
    bundle, _ = _build_prompt(
        example, args.technique, "incomplete-context", indices, client, cfg
    )
    record = run_complete(
        bundle, client, technique=args.technique, model=cfg.model
    )
    print(record.generated_code)
    return EXIT_OK


def _cmd_eval(args) -> int:
    benchmark = load_benchmark(args.benchmark)
    indices = _load_indices(args)
    client = _make_client(args)
    cfg = _run_cfg(args)
    records, scores = run_pipeline(
        benchmark, args.technique, args.mode, indices, client, cfg
    )
    report = aggregate_report(
        records, scores, benchmark,
        run_id=Path(args.out).stem, cfg=cfg,
        technique=args.technique, mode=args.mode,
    )
    Path(args.out).write_text(report.to_json() + "\n", encoding="utf-8")
    print(render_comparison([report]))
    return EXIT_OK


def _cmd_report(args) -> int:
    reports = []
    for path in args.reports:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        reports.append(RunReport(**data))
    print(render_comparison(reports))
    return EXIT_OK


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    indices = _load_indices(args)
    client = None
    if args.mock_reply is not None or args.llm_endpoint:
        client = _make_client(args)
    app = create_app(indices, client)
    uvicorn.run(app, host=args.host, port=args.port)
    return EXIT_OK


_COMMANDS = {
    "extract": _cmd_extract,
    "index": _cmd_index,
    "retrieve": _cmd_retrieve,
    "complete": _cmd_complete,
    "eval": _cmd_eval,
    "report": _cmd_report,
    "serve": _cmd_serve,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CcragError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
