"""Lightweight lexical analysis for C++ sources.

Provides comment stripping, preprocessor-directive scanning (includes and
macro definitions), and a token stream with byte offsets and line numbers.
This is deliberately not a full C++ front end: the extractor only needs
function/class/macro boundaries, which a bracket-aware token scan yields
reliably on real-world code.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

_ID_RE = re.compile(r"[A-Za-z_]\w*")
_TOKEN_RE = re.compile(
    r"""
    (?P<id>[A-Za-z_]\w*)
  | (?P<num>\.?\d[\w.+-]*)
  | (?P<str>"(?:\\.|[^"\\])*")
  | (?P<chr>'(?:\\.|[^'\\])*')
  | (?P<punct>::|->\*?|\+\+|--|<<=|>>=|<<|>>|<=|>=|==|!=|&&|\|\||[-+*/%^&|~!<>=?:;,.(){}\[\]])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # id | num | str | chr | punct
    value: str
    pos: int
    line: int


@dataclass(frozen=True)
class RawMacro:
    """One #define, before transformation into a function-like unit."""

    name: str
    params: tuple | None  # None for object-like macros
    body: str
    start_line: int
    end_line: int


@dataclass(frozen=True)
class IncludeDirective:
    path: str
    is_system: bool
    line: int


def strip_comments(text: str, keep_layout: bool = True) -> str:
    """Remove // and /* */ comments, preserving string/char literals.

    With keep_layout, comment characters become spaces (newlines kept) so
    byte offsets and line numbers of the remaining code are unchanged.
    Without it, comment characters are dropped entirely (newlines inside
    block comments are still kept so line structure survives).
    """
    out = []
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "/" and i + 1 < n and text[i + 1] == "/":
            j = text.find("\n", i)
            if j == -1:
                j = n
            if keep_layout:
                out.append(" " * (j - i))
            i = j
        elif ch == "/" and i + 1 < n and text[i + 1] == "*":
            j = text.find("*/", i + 2)
            j = n if j == -1 else j + 2
            if keep_layout:
                out.append(
                    "".join("\n" if c == "\n" else " " for c in text[i:j])
                )
            else:
                out.append("\n" * text.count("\n", i, j))
            i = j
        elif ch == '"' or ch == "'":
            j = i + 1
            while j < n:
                if text[j] == "\\":
                    j += 2
                    continue
                if text[j] == ch:
                    j += 1
                    break
                j += 1
            else:
                j = n
            out.append(text[i:j])
            i = j
        else:
            out.append(ch)
            i += 1
    return "".join(out)


_INCLUDE_RE = re.compile(r'#\s*include\s*(?:"([^"]+)"|<([^>]+)>)')
_DEFINE_RE = re.compile(r"#\s*define\s+([A-Za-z_]\w*)(\()?")


def scan_directives(text: str):
    """Scan comment-stripped text for includes and macro definitions.

    Returns (code, includes, macros) where code has every preprocessor
    directive line blanked out (newlines preserved) so the token scan never
    sees directive fragments.
    """
    lines = strip_comments(text).split("\n")
    includes: list[IncludeDirective] = []
    macros: list[RawMacro] = []
    blanked = list(lines)

    i = 0
    while i < len(lines):
        stripped = lines[i].lstrip()
        if not stripped.startswith("#"):
            i += 1
            continue
        # Join backslash continuations into one logical directive.
        start = i
        logical = lines[i]
        while logical.rstrip().endswith("\\") and i + 1 < len(lines):
            logical = logical.rstrip()[:-1] + " " + lines[i + 1]
            i += 1
        for j in range(start, i + 1):
            blanked[j] = " " * len(lines[j])  # keep byte offsets stable
        end = i
        i += 1

        m = _INCLUDE_RE.match(logical.lstrip())
        if m:
            quoted, system = m.group(1), m.group(2)
            includes.append(
                IncludeDirective(
                    path=quoted or system,
                    is_system=system is not None,
                    line=start + 1,
                )
            )
            continue
        m = _DEFINE_RE.match(logical.lstrip())
        if m:
            macros.append(_parse_define(m, logical.lstrip(), start + 1, end + 1))

    return "\n".join(blanked), includes, macros


def _parse_define(match: re.Match, logical: str, start_line: int, end_line: int) -> RawMacro:
    name = match.group(1)
    rest = logical[match.end(1):]
    params = None
    if rest.startswith("("):  # function-like only when '(' abuts the name
        depth = 0
        for k, ch in enumerate(rest):
            if ch == "(":
                depth += 1
            elif ch == ")":
                depth -= 1
                if depth == 0:
                    inner = rest[1:k].strip()
                    params = tuple(
                        p.strip() for p in inner.split(",") if p.strip()
                    ) if inner else ()
                    rest = rest[k + 1:]
                    break
        else:
            params = ()
            rest = ""
    body = " ".join(rest.split())
    return RawMacro(
        name=name, params=params, body=body,
        start_line=start_line, end_line=end_line,
    )


def tokenize(code: str) -> list[Token]:
    """Tokenize comment- and directive-free C++ code."""
    tokens = []
    line = 1
    last = 0
    for m in _TOKEN_RE.finditer(code):
        line += code.count("\n", last, m.start())
        last = m.start()
        kind = m.lastgroup
        tokens.append(Token(kind=kind, value=m.group(), pos=m.start(), line=line))
    return tokens


_OPEN = {"(": ")", "{": "}", "[": "]"}


def match_bracket(tokens: list[Token], i: int) -> int:
    """Index of the token closing the bracket opened at i; len(tokens) if unmatched."""
    open_val = tokens[i].value
    close_val = _OPEN[open_val]
    depth = 0
    for j in range(i, len(tokens)):
        v = tokens[j].value
        if v == open_val:
            depth += 1
        elif v == close_val:
            depth -= 1
            if depth == 0:
                return j
    return len(tokens)


def match_angle(tokens: list[Token], i: int) -> int:
    """Match a template angle bracket opened at i, treating >> as two closes."""
    depth = 0
    j = i
    while j < len(tokens):
        v = tokens[j].value
        if v == "<":
            depth += 1
        elif v == ">":
            depth -= 1
            if depth == 0:
                return j
        elif v == ">>":
            depth -= 2
            if depth <= 0:
                return j
        elif v in "({[":
            j = match_bracket(tokens, j)
        elif v == ";":
            return len(tokens)  # not a template argument list after all
        j += 1
    return len(tokens)
