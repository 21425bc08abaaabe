"""Identifier-keyed lookup stores for identifier-based retrieval.

Every unit is reachable under both its simple identifier and its qualified
name, within its own kind. Misses return empty lists, never errors.
"""

from __future__ import annotations

import json
from pathlib import Path

from .errors import ConfigError
from .units import CodeUnit, UnitKind, units_hash

SEGMENT_FILES = {k: f"{k.value}.jsonl" for k in UnitKind}
MANIFEST_NAME = "manifest.json"


class IdentifierStore:
    """Per-kind multimap from identifier/qualified name to corpus units."""

    def __init__(self):
        self._by_kind: dict[UnitKind, dict[str, list[CodeUnit]]] = {
            k: {} for k in UnitKind
        }
        self.content_hash: str | None = None

    def _add(self, unit: CodeUnit) -> None:
        table = self._by_kind[unit.kind]
        keys = {unit.identifier, unit.qualified_name}
        for key in keys:
            table.setdefault(key, []).append(unit)

    def lookup(self, identifier: str, kind: UnitKind) -> list[CodeUnit]:
        """All units of the given kind keyed by identifier or qualified name."""
        return list(self._by_kind[kind].get(identifier, []))

    def units(self, kind: UnitKind | None = None) -> list[CodeUnit]:
        kinds = [kind] if kind else list(UnitKind)
        seen = []
        marker = set()
        for k in kinds:
            for values in self._by_kind[k].values():
                for u in values:
                    key = id(u)
                    if key not in marker:
                        marker.add(key)
                        seen.append(u)
        return seen

    def key_count(self, kind: UnitKind) -> int:
        return len(self._by_kind[kind])


def build_identifier_index(corpus: list[CodeUnit]) -> IdentifierStore:
    """Index a corpus; deterministic, corpus order preserved per key."""
    store = IdentifierStore()
    for unit in corpus:
        store._add(unit)
    store.content_hash = units_hash(corpus)
    return store


def lookup(store: IdentifierStore, identifier: str, kind: UnitKind) -> list[CodeUnit]:
    return store.lookup(identifier, kind)


def save_identifier_index(store: IdentifierStore, directory: str | Path) -> None:
    """Persist one segment per kind plus a manifest with the corpus hash."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for kind in UnitKind:
        units = store.units(kind)
        with (directory / SEGMENT_FILES[kind]).open("w", encoding="utf-8") as fh:
            for u in units:
                fh.write(json.dumps(u.to_record(), ensure_ascii=False) + "\n")
    manifest = {
        "type": "identifier-index",
        "corpus_hash": store.content_hash,
        "segments": {k.value: SEGMENT_FILES[k] for k in UnitKind},
    }
    (directory / MANIFEST_NAME).write_text(
        json.dumps(manifest, indent=2) + "\n", encoding="utf-8"
    )


def load_identifier_index(
    directory: str | Path, expected_corpus_hash: str | None = None
) -> IdentifierStore:
    directory = Path(directory)
    manifest_path = directory / MANIFEST_NAME
    if not manifest_path.is_file():
        raise ConfigError(f"no identifier index at {directory}")
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    if (
        expected_corpus_hash is not None
        and manifest.get("corpus_hash") != expected_corpus_hash
    ):
        raise ConfigError(
            "identifier index is stale: corpus hash mismatch "
            f"({manifest.get('corpus_hash')} != {expected_corpus_hash})"
        )
    store = IdentifierStore()
    for kind in UnitKind:
        seg = directory / SEGMENT_FILES[kind]
        if not seg.is_file():
            continue
        for line in seg.read_text(encoding="utf-8").splitlines():
            if line.strip():
                store._add(CodeUnit.from_record(json.loads(line)))
    store.content_hash = manifest.get("corpus_hash")
    return store
