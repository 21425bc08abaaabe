"""Fine-grained corpus extraction from C++/protobuf project trees.

Top-level entry points are extract_file (one source file plus its not-yet
processed header closure) and build_corpus (a whole set of project roots,
with generated-file filtering, dedup, and deterministic output order).
"""

from __future__ import annotations

import fnmatch
import json
import re
import threading
from dataclasses import dataclass, field
from pathlib import Path, PurePosixPath

from . import protoparse
from .cpplex import RawMacro, scan_directives, strip_comments
from .cppparse import CppElements, parse_cpp
from .errors import ConfigError, ParseFailure, UnsupportedFileType
from .units import (
    CodeUnit,
    ExtractionStats,
    FileKind,
    Origin,
    SourceFile,
    UnitKind,
    file_kind_for,
    write_corpus,
)

GENERATED_SUFFIXES = (".pb.cc", ".pb.h")


@dataclass
class IncludeGraph:
    """Header include relations plus the shared processed-header set.

    The processed set is grow-only and guarded by a lock so concurrent
    extract_file calls on distinct files can share one graph.
    """

    nodes: set = field(default_factory=set)
    edges: set = field(default_factory=set)
    processed: set = field(default_factory=set)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def mark_processed(self, path: str) -> bool:
        """Mark a header processed; False when it already was."""
        with self._lock:
            self.nodes.add(path)
            if path in self.processed:
                return False
            self.processed.add(path)
            return True

    def add_edge(self, src: str, dst: str) -> None:
        with self._lock:
            self.nodes.add(src)
            self.nodes.add(dst)
            self.edges.add((src, dst))


class RepoResolver:
    """Resolves include directives against a repo's in-memory file map."""

    def __init__(self, files: dict[str, SourceFile]):
        self.files = dict(files)

    @classmethod
    def from_root(cls, root: str | Path) -> "RepoResolver":
        root = Path(root)
        if not root.is_dir():
            raise ConfigError(f"project root not readable: {root}")
        files = {}
        for p in sorted(root.rglob("*")):
            if p.is_file() and file_kind_for(str(p)) is not FileKind.OTHER:
                rel = p.relative_to(root).as_posix()
                files[rel] = SourceFile.from_bytes(rel, p.read_bytes())
        return cls(files)

    def get(self, rel_path: str) -> SourceFile | None:
        return self.files.get(rel_path)

    def resolve(self, include: str, from_path: str) -> str | None:
        """Repo-relative path for an include, or None when unresolvable."""
        base = PurePosixPath(from_path).parent
        candidate = _normalize(base / include)
        if candidate in self.files:
            return candidate
        candidate = _normalize(PurePosixPath(include))
        if candidate in self.files:
            return candidate
        return None


def _normalize(path: PurePosixPath) -> str:
    parts = []
    for part in path.parts:
        if part == "..":
            if parts:
                parts.pop()
        elif part != ".":
            parts.append(part)
    return "/".join(parts)


_TRAILING_WS = re.compile(r"[ \t]+$", re.MULTILINE)


def normalize_text(text: str) -> str:
    """Strip comments, trim trailing whitespace, collapse blank-line runs.

    Idempotent: applying twice equals applying once.
    """
    s = strip_comments(text, keep_layout=False)
    s = _TRAILING_WS.sub("", s)
    lines = []
    blank = False
    for line in s.split("\n"):
        if line == "":
            blank = True
            continue
        if blank and lines:
            lines.append("")
        blank = False
        lines.append(line)
    return "\n".join(lines)


def normalize_code(units: list[CodeUnit]) -> list[CodeUnit]:
    """Normalize unit texts, dropping units whose text becomes empty."""
    out = []
    for u in units:
        text = normalize_text(u.text)
        if not text:
            continue
        out.append(
            CodeUnit(
                kind=u.kind,
                identifier=u.identifier,
                qualified_name=u.qualified_name,
                text=text,
                origin=u.origin,
                from_macro=u.from_macro,
            )
        )
    return out


def transform_macro(macro: RawMacro, path: str = "", project: str = "") -> CodeUnit:
    """Rewrite a #define into a function-like unit.

    A macro with a replacement body becomes a func-def whose body is the
    macro body; a body-less macro becomes a func-dec. Object-like macros
    take zero parameters.
    """
    params = ", ".join(macro.params) if macro.params else ""
    if macro.body:
        kind = UnitKind.FUNC_DEF
        text = f"{macro.name}({params}) {{ {macro.body} }}"
    else:
        kind = UnitKind.FUNC_DEC
        text = f"{macro.name}({params});"
    return CodeUnit(
        kind=kind,
        identifier=macro.name,
        qualified_name=macro.name,
        text=text,
        origin=Origin(
            path=path,
            start_line=macro.start_line,
            end_line=macro.end_line,
            project=project,
        ),
        from_macro=True,
    )


def extract_cpp_elements(file: SourceFile) -> CppElements:
    """Raw class/function/macro elements of one cpp or header file."""
    if file.kind not in (FileKind.CPP, FileKind.HEADER):
        raise UnsupportedFileType(f"{file.path}: kind={file.kind.value}")
    return parse_cpp(file.text)


def get_recursive_dependencies(
    file: SourceFile,
    repo: RepoResolver,
    graph: IncludeGraph | None = None,
    stats: ExtractionStats | None = None,
) -> list[str]:
    """Depth-first closure of quoted in-repo includes, in directive order.

    System includes (<...>) are excluded; cycles are cut by a visited set;
    unresolved includes are counted and skipped.
    """
    order: list[str] = []
    visited = {file.path}

    def visit(src: SourceFile) -> None:
        _code, includes, _macros = scan_directives(src.text)
        for inc in includes:
            if inc.is_system:
                continue
            resolved = repo.resolve(inc.path, src.path)
            if resolved is None:
                if stats is not None:
                    stats.unresolved_includes += 1
                continue
            if graph is not None:
                graph.add_edge(src.path, resolved)
            if resolved in visited:
                continue
            visited.add(resolved)
            order.append(resolved)
            target = repo.get(resolved)
            if target is not None:
                visit(target)

    visit(file)
    return order


def extract_proto_messages(file: SourceFile, project: str = "") -> list[CodeUnit]:
    """One msg-def unit per message, nested messages flattened."""
    units = []
    for msg in protoparse.find_messages(file.text):
        units.append(
            CodeUnit(
                kind=UnitKind.MSG_DEF,
                identifier=msg["name"],
                qualified_name=msg["qualified_name"],
                text=msg["text"],
                origin=Origin(
                    path=file.path,
                    start_line=msg["start_line"],
                    end_line=msg["end_line"],
                    project=project,
                ),
            )
        )
    return units


def extract_file(
    file: SourceFile,
    graph: IncludeGraph,
    repo: RepoResolver,
    project: str = "",
    stats: ExtractionStats | None = None,
) -> list[CodeUnit]:
    """Run the full preprocessing pass for one top-level source file.

    cpp files yield their own elements plus those of every recursively
    reachable header not yet in graph.processed; macros are transformed and
    all texts normalized. proto files yield message units only.
    """
    if file.kind is FileKind.PROTO:
        units = extract_proto_messages(file, project)
        return _finalize(units, stats)
    if file.kind is not FileKind.CPP:
        raise UnsupportedFileType(
            f"{file.path}: unsupported file type {file.kind.value!r}"
        )

    sources: list[tuple[str, CppElements]] = []
    sources.append((file.path, _parse_tolerant(file, stats)))
    for header_path in get_recursive_dependencies(file, repo, graph, stats):
        if not graph.mark_processed(header_path):
            continue
        header = repo.get(header_path)
        if header is None:
            continue
        sources.append((header_path, _parse_tolerant(header, stats)))

    units: list[CodeUnit] = []
    for path, elements in sources:
        for el in elements.class_defs:
            units.append(_unit_from_element(el, UnitKind.CLASS_DEF, path, project))
        for el in elements.func_defs:
            units.append(_unit_from_element(el, UnitKind.FUNC_DEF, path, project))
        for el in elements.func_decs:
            units.append(_unit_from_element(el, UnitKind.FUNC_DEC, path, project))
        for macro in elements.macros:
            units.append(transform_macro(macro, path, project))
    return _finalize(units, stats)


def _parse_tolerant(file: SourceFile, stats: ExtractionStats | None) -> CppElements:
    try:
        return extract_cpp_elements(file)
    except ParseFailure as exc:
        if stats is not None:
            stats.parse_failures += 1
        partial = exc.partial
        return partial if isinstance(partial, CppElements) else CppElements.empty()


def _unit_from_element(el, kind: UnitKind, path: str, project: str) -> CodeUnit:
    return CodeUnit(
        kind=kind,
        identifier=el.identifier,
        qualified_name=el.qualified_name,
        text=el.text,
        origin=Origin(
            path=path,
            start_line=el.start_line,
            end_line=el.end_line,
            project=project,
        ),
    )


def _finalize(units: list[CodeUnit], stats: ExtractionStats | None) -> list[CodeUnit]:
    units = normalize_code(units)
    if stats is not None:
        for u in units:
            stats.count_unit(u.kind)
    return units


def is_generated(path: str, extra_patterns: tuple = ()) -> bool:
    if any(path.endswith(sfx) for sfx in GENERATED_SUFFIXES):
        return True
    name = PurePosixPath(path).name
    return any(
        fnmatch.fnmatch(path, pat) or fnmatch.fnmatch(name, pat)
        for pat in extra_patterns
    )


def build_corpus(
    project_roots: list[str | Path],
    out_path: str | Path | None = None,
    extra_generated_patterns: tuple = (),
) -> tuple[list[CodeUnit], ExtractionStats]:
    """Extract every cpp and proto file under each root into one corpus.

    Generated protobuf outputs (.pb.cc/.pb.h) are skipped, units are
    deduplicated by (kind, normalized text) keeping the first occurrence in
    (project, path, start_line) order, and the result is written to
    out_path when given (stats as a .stats.json sidecar).
    """
    stats = ExtractionStats()
    all_units: list[CodeUnit] = []

    for root in project_roots:
        root = Path(root)
        project = root.name
        repo = RepoResolver.from_root(root)
        graph = IncludeGraph()
        for rel_path in sorted(repo.files):
            src = repo.files[rel_path]
            stats.files_seen += 1
            stats.bytes_replaced += src.replaced_bytes
            if is_generated(rel_path, extra_generated_patterns):
                stats.files_skipped_generated += 1
                continue
            if src.kind not in (FileKind.CPP, FileKind.PROTO):
                continue
            all_units.extend(extract_file(src, graph, repo, project, stats))

    all_units.sort(
        key=lambda u: (u.origin.project, u.origin.path, u.origin.start_line)
    )
    seen: set = set()
    deduped = []
    for u in all_units:
        key = (u.kind.value, u.text)
        if key in seen:
            stats.duplicate_units_dropped += 1
            continue
        seen.add(key)
        deduped.append(u)

    if out_path is not None:
        write_corpus(deduped, out_path)
        sidecar = Path(str(out_path) + ".stats.json")
        sidecar.write_text(
            json.dumps(stats.to_record(), indent=2) + "\n", encoding="utf-8"
        )
    return deduped, stats
