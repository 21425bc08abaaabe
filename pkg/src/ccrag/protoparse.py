"""Regular-expression based extraction of protobuf message definitions."""

from __future__ import annotations

import re

from .cpplex import strip_comments
from .errors import ParseFailure

_MESSAGE_RE = re.compile(r"\bmessage\s+([A-Za-z_]\w*)\s*\{")


def find_messages(text: str) -> list[dict]:
    """Find all message blocks, nested ones flattened with dot-qualified names.

    Returns dicts {name, qualified_name, text, start_line, end_line} in
    source order. Raises ParseFailure when a message block's braces never
    balance.
    """
    code = strip_comments(text)
    results = []
    for m in _MESSAGE_RE.finditer(code):
        open_pos = m.end() - 1
        close_pos = _match_brace(code, open_pos)
        if close_pos is None:
            raise ParseFailure(
                f"unbalanced braces in message {m.group(1)!r}", partial=results
            )
        results.append(
            {
                "name": m.group(1),
                "start": m.start(),
                "end": close_pos + 1,
                "text": text[m.start():close_pos + 1],
                "start_line": code.count("\n", 0, m.start()) + 1,
                "end_line": code.count("\n", 0, close_pos) + 1,
            }
        )
    # Qualify nested messages by their enclosing blocks.
    for r in results:
        enclosing = [
            o["name"]
            for o in results
            if o["start"] < r["start"] and o["end"] > r["end"]
        ]
        r["qualified_name"] = ".".join([*enclosing, r["name"]])
    return results


def _match_brace(code: str, open_pos: int) -> int | None:
    depth = 0
    for i in range(open_pos, len(code)):
        if code[i] == "{":
            depth += 1
        elif code[i] == "}":
            depth -= 1
            if depth == 0:
                return i
    return None
