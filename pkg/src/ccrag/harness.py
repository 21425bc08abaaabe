"""Benchmark I/O, end-to-end pipeline runs, and aggregate reporting."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .completion import (
    DEFAULT_BUDGET,
    PromptBundle,
    build_identifier_prompt,
    build_similarity_prompt,
    complete,
    load_template,
    need_to_lookup,
)
from .errors import (
    CcragError,
    ConfigError,
    CoverageGap,
    DuplicateId,
    SchemaError,
    UnknownTechnique,
)
from .metrics import CodeBleuWeights, EvalScores, codebleu
from .retrieval import (
    Indices,
    RetrievalConfig,
    RetrievalQuery,
    retrieve,
)
from .units import UnitKind

DOMAINS = ("client-call", "connection", "colib", "encoding", "kv", "mq", "utils")
DIFFICULTIES = ("easy", "hard")
IDENTIFIER_TECHNIQUES = ("msg-def", "class-def", "func-dec", "func-def")
SIMILARITY_TECHNIQUES = ("bm25", "semantic", "hybrid")
ALL_TECHNIQUES = ("base",) + IDENTIFIER_TECHNIQUES + SIMILARITY_TECHNIQUES


@dataclass(frozen=True)
class BenchmarkExample:
    id: str
    domain: str
    difficulty: str
    context: str
    ground_truth: str
    annotations: tuple = ()


def load_benchmark(path: str | Path) -> list[BenchmarkExample]:
    """Validated examples from a line-delimited benchmark file."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"benchmark file not found: {path}")
    examples = []
    seen_ids = set()
    for line_no, line in enumerate(
        path.read_text(encoding="utf-8").splitlines(), start=1
    ):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"invalid JSON: {exc}", line_no=line_no)
        for fld in ("id", "domain", "difficulty", "context", "ground_truth"):
            if fld not in record:
                raise SchemaError(f"missing field {fld!r}", line_no=line_no)
        if record["domain"] not in DOMAINS:
            raise SchemaError(
                f"unknown domain {record['domain']!r}", line_no=line_no
            )
        if record["difficulty"] not in DIFFICULTIES:
            raise SchemaError(
                f"unknown difficulty {record['difficulty']!r}", line_no=line_no
            )
        if not record["context"] or not record["ground_truth"]:
            raise SchemaError(
                "context and ground_truth must be non-empty", line_no=line_no
            )
        if record["id"] in seen_ids:
            raise DuplicateId(record["id"])
        seen_ids.add(record["id"])
        examples.append(
            BenchmarkExample(
                id=record["id"],
                domain=record["domain"],
                difficulty=record["difficulty"],
                context=record["context"],
                ground_truth=record["ground_truth"],
                annotations=tuple(
                    tuple(sorted(a.items())) if isinstance(a, dict) else a
                    for a in record.get("annotations", [])
                ),
            )
        )
    return examples


@dataclass(frozen=True)
class RunConfig:
    k: int = 4
    budget: int = DEFAULT_BUDGET
    template_lang: str = "en"
    token_counter: str = "code"
    weights: CodeBleuWeights = field(default_factory=CodeBleuWeights)
    model: str = "mock"


def _build_prompt(example, technique, mode, indices, client, cfg):
    context = example.context
    if technique == "base":
        template = load_template("similar", cfg.template_lang)
        return build_similarity_prompt(
            [], context, template, cfg.budget, cfg.token_counter
        ), False
    if technique in SIMILARITY_TECHNIQUES:
        query_text = context
        if mode == "complete-snippet":
            query_text = context + "\n" + example.ground_truth
        query = RetrievalQuery(mode=mode, text=query_text, example_id=example.id)
        snippets = retrieve(query, RetrievalConfig(cfg.k, technique), indices)
        template = load_template("similar", cfg.template_lang)
        return build_similarity_prompt(
            snippets, context, template, cfg.budget, cfg.token_counter
        ), False
    if technique in IDENTIFIER_TECHNIQUES:
        if indices.identifier is None:
            raise ConfigError("identifier retrieval requires an identifier index")
        request = need_to_lookup(context, client, indices.identifier)
        kind = UnitKind(technique)
        wanted = {
            UnitKind.MSG_DEF: request.messages,
            UnitKind.CLASS_DEF: request.classes,
            UnitKind.FUNC_DEC: request.functions,
            UnitKind.FUNC_DEF: request.functions,
        }[kind]
        knowledge = []
        for name in sorted(wanted):
            knowledge.extend(indices.identifier.lookup(name, kind))
        template = load_template(technique, cfg.template_lang)
        bundle = build_identifier_prompt(
            kind, knowledge, context, template, cfg.budget, cfg.token_counter
        )
        return bundle, request.from_fallback
    raise UnknownTechnique(technique)


def run_pipeline(
    benchmark: list[BenchmarkExample],
    technique: str,
    mode: str,
    indices: Indices,
    client,
    cfg: RunConfig = RunConfig(),
):
    """(retrieve ->) build prompt -> complete -> score, per example.

    Per-example failures are recorded with score 0 and an error note; only
    configuration problems abort the run.
    """
    if technique not in ALL_TECHNIQUES:
        raise UnknownTechnique(technique)
    records = []
    scores: dict[str, EvalScores] = {}
    for example in benchmark:
        try:
            bundle, fallback = _build_prompt(
                example, technique, mode, indices, client, cfg
            )
            record = complete(
                bundle,
                client,
                example_id=example.id,
                technique=technique,
                mode=mode,
                model=cfg.model,
            )
            if fallback:
                record = _flag_fallback(record)
        except ConfigError:
            raise
        except CcragError as exc:
            record, score = _failure_record(example, technique, mode, exc)
            records.append(record)
            scores[example.id] = score
            continue
        records.append(record)
        scores[example.id] = codebleu(
            record.generated_code, example.ground_truth, cfg.weights
        )
    return records, scores


def _flag_fallback(record):
    from dataclasses import replace

    return replace(record, fallback_used=True)


def _failure_record(example, technique, mode, exc):
    from .completion import CompletionRecord

    record = CompletionRecord(
        example_id=example.id,
        technique=technique,
        mode=mode,
        bundle=PromptBundle(template_id="similar", text="", token_count=0),
        generated_code="",
        model="",
        latency_s=0.0,
        error=f"{type(exc).__name__}: {exc}",
    )
    score = EvalScores(
        codebleu=0.0,
        es=0.0,
        components={"ngram": 0.0, "weighted_ngram": 0.0, "ast": 0.0, "dataflow": 0.0},
        flags=("example-failed",),
    )
    return record, score


@dataclass(frozen=True)
class RunReport:
    run_id: str
    model: str
    technique: str
    mode: str
    per_example: dict  # example_id -> {"cb": float, "es": float}
    aggregates: dict  # overall / by_domain / by_difficulty, percentages
    config: dict

    def to_json(self) -> str:
        return json.dumps(
            {
                "run_id": self.run_id,
                "model": self.model,
                "technique": self.technique,
                "mode": self.mode,
                "per_example": self.per_example,
                "aggregates": self.aggregates,
                "config": self.config,
            },
            ensure_ascii=False,
            sort_keys=True,
            indent=2,
        )


def _mean_pct(values: list[float]) -> float:
    return 100.0 * sum(values) / len(values)


def aggregate_report(
    records,
    scores: dict[str, EvalScores],
    benchmark: list[BenchmarkExample],
    run_id: str = "run",
    cfg: RunConfig = RunConfig(),
    technique: str = "base",
    mode: str = "incomplete-context",
) -> RunReport:
    """Percentage aggregates overall, by domain, and by difficulty."""
    missing = [e.id for e in benchmark if e.id not in scores]
    if missing or not benchmark:
        raise CoverageGap(f"missing scores for {missing}")
    by_example = {
        e.id: {"cb": scores[e.id].codebleu, "es": scores[e.id].es}
        for e in benchmark
    }

    def agg(examples):
        return {
            "cb": _mean_pct([scores[e.id].codebleu for e in examples]),
            "es": _mean_pct([scores[e.id].es for e in examples]),
            "n": len(examples),
        }

    aggregates = {
        "overall": agg(benchmark),
        "by_domain": {
            d: agg([e for e in benchmark if e.domain == d])
            for d in DOMAINS
            if any(e.domain == d for e in benchmark)
        },
        "by_difficulty": {
            d: agg([e for e in benchmark if e.difficulty == d])
            for d in DIFFICULTIES
            if any(e.difficulty == d for e in benchmark)
        },
    }
    config = {
        "k": cfg.k,
        "budget": cfg.budget,
        "template_lang": cfg.template_lang,
        "token_counter": cfg.token_counter,
        "weights": [
            cfg.weights.alpha, cfg.weights.beta, cfg.weights.gamma,
            cfg.weights.delta,
        ],
        "fusion_policy": "round-robin-lexical-first",
    }
    return RunReport(
        run_id=run_id,
        model=cfg.model,
        technique=technique,
        mode=mode,
        per_example=by_example,
        aggregates=aggregates,
        config=config,
    )


def render_comparison(reports: list[RunReport]) -> str:
    """Text table of techniques x CB/ES (percentages and raw [0,1])."""
    lines = []
    header = f"{'technique':<12} {'mode':<20} {'CB':>8} {'ES':>8} {'CB raw':>8} {'ES raw':>8}"
    lines.append(header)
    lines.append("-" * len(header))
    for report in reports:
        overall = report.aggregates["overall"]
        lines.append(
            f"{report.technique:<12} {report.mode:<20} "
            f"{overall['cb']:>8.2f} {overall['es']:>8.2f} "
            f"{overall['cb'] / 100:>8.4f} {overall['es'] / 100:>8.4f}"
        )
    return "\n".join(lines)
