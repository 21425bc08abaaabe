"""Grammar-driven extraction of C++ declarations from a token stream.

Walks namespace/class scopes and recognizes class definitions, function
definitions, and function declarations by their bracket structure. Function
bodies are skipped wholesale, so control-flow statements never masquerade
as declarations. Member functions are emitted both inside their class text
and as standalone elements with scope-qualified names.
"""

from __future__ import annotations

from dataclasses import dataclass

from .cpplex import RawMacro, Token, match_angle, match_bracket, scan_directives, tokenize
from .errors import ParseFailure

TYPE_KEYWORDS = {
    "int", "void", "char", "bool", "float", "double", "long", "short",
    "unsigned", "signed", "auto", "const", "constexpr", "static", "inline",
    "virtual", "volatile", "mutable", "register", "wchar_t", "size_t",
    "explicit", "extern", "typename", "class", "struct", "enum", "union",
}

CONTROL_KEYWORDS = {
    "if", "for", "while", "switch", "return", "catch", "do", "else",
    "sizeof", "new", "delete", "throw", "case", "goto", "default",
    "alignof", "decltype", "typeid", "static_assert",
}

_POST_PARAM_OK = {"const", "noexcept", "override", "final", "volatile", "&", "&&", "throw", "try"}


@dataclass(frozen=True)
class RawElement:
    """A class or function element with its source span (1-based lines)."""

    kind: str  # "class-def" | "func-def" | "func-dec"
    identifier: str
    qualified_name: str
    text: str
    start_line: int
    end_line: int


@dataclass
class CppElements:
    class_defs: list
    func_defs: list
    func_decs: list
    macros: list

    @classmethod
    def empty(cls) -> "CppElements":
        return cls([], [], [], [])


def parse_cpp(text: str) -> CppElements:
    """Extract classes, functions, and macros from one C++ source text."""
    code, _includes, macros = scan_directives(text)
    tokens = tokenize(code)
    elements = CppElements([], [], [], list(macros))
    try:
        _parse_region(tokens, 0, len(tokens), [], text, elements)
    except RecursionError:
        raise ParseFailure("nesting too deep", partial=elements)
    return elements


def _line_of(tokens, i, fallback=1):
    if 0 <= i < len(tokens):
        return tokens[i].line
    return fallback


def _emit(elements, kind, name_segments, scope, text, tokens, start_i, end_i):
    identifier = name_segments[-1]
    qualified = "::".join([*scope, *name_segments])
    start_tok, end_tok = tokens[start_i], tokens[end_i]
    snippet = text[start_tok.pos:end_tok.pos + len(end_tok.value)]
    element = RawElement(
        kind=kind,
        identifier=identifier,
        qualified_name=qualified,
        text=snippet,
        start_line=start_tok.line,
        end_line=end_tok.line,
    )
    if kind == "class-def":
        elements.class_defs.append(element)
    elif kind == "func-def":
        elements.func_defs.append(element)
    else:
        elements.func_decs.append(element)


def _parse_region(tokens, i, end, scope, text, elements):
    decl_start = None  # set while a template<...> prefix is pending
    while i < end:
        t = tokens[i]
        v = t.value

        if v == ";":
            decl_start = None
            i += 1
            continue

        if t.kind == "id" and v in ("public", "private", "protected") \
                and i + 1 < end and tokens[i + 1].value == ":":
            i += 2
            continue

        if v == "template":
            if decl_start is None:
                decl_start = i
            j = i + 1
            if j < end and tokens[j].value == "<":
                j = match_angle(tokens, j)
            i = j + 1
            continue

        if v == "inline" and i + 1 < end and tokens[i + 1].value == "namespace":
            i += 1
            continue

        if v == "namespace":
            i = _parse_namespace(tokens, i, end, scope, text, elements)
            decl_start = None
            continue

        if v == "enum":
            i = _skip_enum(tokens, i, end)
            decl_start = None
            continue

        if v in ("typedef", "using", "static_assert", "friend"):
            i = _skip_to(tokens, i, end, ";") + 1
            decl_start = None
            continue

        if v == "extern" and i + 1 < end and tokens[i + 1].kind == "str":
            if i + 2 < end and tokens[i + 2].value == "{":
                close = match_bracket(tokens, i + 2)
                _check_matched(close, len(tokens), tokens, i + 2, elements)
                _parse_region(tokens, i + 3, min(close, end), scope, text, elements)
                i = close + 1
            else:
                i += 2
            decl_start = None
            continue

        if v in ("class", "struct") and _is_class_definition(tokens, i, end):
            i = _parse_class(tokens, i, end, scope, text, elements,
                             decl_start if decl_start is not None else i)
            decl_start = None
            continue

        # Anything else: a declaration, definition, or stray tokens.
        i = _parse_declaration(tokens, i, end, scope, text, elements,
                               decl_start if decl_start is not None else i)
        decl_start = None
    return i


def _check_matched(close, limit, tokens, open_i, elements):
    if close >= limit:
        raise ParseFailure(
            f"unmatched {tokens[open_i].value!r} at line {tokens[open_i].line}",
            partial=elements,
        )


def _skip_to(tokens, i, end, value):
    depth_stack = 0
    while i < end:
        v = tokens[i].value
        if v in "({[":
            i = match_bracket(tokens, i)
            if i >= end:
                return end
        elif v == value and depth_stack == 0:
            return i
        i += 1
    return end


def _skip_enum(tokens, i, end):
    j = i + 1
    while j < end and tokens[j].value not in ("{", ";"):
        j += 1
    if j < end and tokens[j].value == "{":
        j = match_bracket(tokens, j)
        j = _skip_to(tokens, j + 1, end, ";")
    return j + 1


def _parse_namespace(tokens, i, end, scope, text, elements):
    names = []
    j = i + 1
    while j < end and tokens[j].kind == "id":
        names.append(tokens[j].value)
        j += 1
        if j < end and tokens[j].value == "::":
            j += 1
        else:
            break
    if j < end and tokens[j].value == "=":  # namespace alias
        return _skip_to(tokens, j, end, ";") + 1
    if j >= end or tokens[j].value != "{":
        return _skip_to(tokens, i, end, ";") + 1
    close = match_bracket(tokens, j)
    _check_matched(close, len(tokens), tokens, j, elements)
    _parse_region(tokens, j + 1, min(close, end), scope + names, text, elements)
    return close + 1


def _is_class_definition(tokens, i, end):
    """True when class/struct at i introduces a body (not a fwd decl or a type use)."""
    j = i + 1
    while j < end:
        v = tokens[j].value
        if v == "<":
            j = match_angle(tokens, j)
            if j >= end:
                return False
        elif v == "{":
            return True
        elif v in (";", ")", ",", "=", "("):
            return False
        j += 1
    return False


def _parse_class(tokens, i, end, scope, text, elements, decl_start):
    j = i + 1
    name = None
    while j < end and tokens[j].value not in ("{", ":", ";"):
        if tokens[j].kind == "id" and tokens[j].value != "final":
            name = tokens[j].value
        if tokens[j].value == "<":
            j = match_angle(tokens, j)
        j += 1
    open_i = _skip_to(tokens, j, end, "{") if (j < end and tokens[j].value == ":") else j
    if open_i >= end or tokens[open_i].value != "{":
        return _skip_to(tokens, i, end, ";") + 1
    close = match_bracket(tokens, open_i)
    _check_matched(close, len(tokens), tokens, open_i, elements)
    # Trailing ';' (and any declared variable names) belong to the statement.
    after = _skip_to(tokens, close, end, ";")
    end_i = after if after < end else close

    if name is not None:
        _emit(elements, "class-def", [name], scope, text, tokens, decl_start, end_i)
        _parse_region(tokens, open_i + 1, close, scope + [name], text, elements)
    return end_i + 1


def _name_segments_before(tokens, paren_i, lo):
    """Walk back from a '(' collecting a qualified function name, or None."""
    j = paren_i - 1
    if j < lo:
        return None, lo
    segments = []
    # operator with a symbol suffix, e.g. operator==, operator+
    if tokens[j].kind == "punct":
        k = j
        while k - 1 >= lo and tokens[k - 1].kind == "punct" and tokens[k - 1].value not in "({[)]};,":
            k -= 1
        if k - 1 >= lo and tokens[k - 1].value == "operator":
            op = "".join(tok.value for tok in tokens[k:j + 1])
            segments.append("operator" + op)
            j = k - 2
        else:
            return None, lo
    elif tokens[j].kind == "id":
        if tokens[j].value in TYPE_KEYWORDS or tokens[j].value in CONTROL_KEYWORDS:
            return None, lo
        name = tokens[j].value
        if j - 1 >= lo and tokens[j - 1].value == "~":
            name = "~" + name
            j -= 1
        segments.append(name)
        j -= 1
    else:
        return None, lo
    # Leading qualifiers: A::B::name
    while j - 1 >= lo and tokens[j].value == "::" and tokens[j - 1].kind == "id":
        segments.insert(0, tokens[j - 1].value)
        j -= 2
    return segments, j + 1


def _parse_declaration(tokens, i, end, scope, text, elements, decl_start):
    """Parse one statement starting at i; emit a function element when one is found."""
    j = i
    saw_assign = False
    paren_i = None
    name_segments = None
    while j < end:
        v = tokens[j].value
        if v == ";":
            if name_segments is not None and not saw_assign:
                _emit(elements, "func-dec", name_segments, scope, text,
                      tokens, decl_start, j)
            return j + 1
        if v == "=" and paren_i is None:
            saw_assign = True
        if v == "<" and j > i and tokens[j - 1].kind == "id":
            k = match_angle(tokens, j)
            if k < end:
                j = k + 1
                continue
        if v == "(":
            close = match_bracket(tokens, j)
            _check_matched(close, len(tokens), tokens, j, elements)
            if name_segments is None and not saw_assign:
                segs, _ = _name_segments_before(tokens, j, i)
                if segs is not None:
                    name_segments = segs
                    paren_i = j
                    j = close + 1
                    return _parse_after_params(
                        tokens, j, end, scope, text, elements,
                        decl_start, name_segments)
            j = close + 1
            continue
        if v == "{":
            close = match_bracket(tokens, j)
            _check_matched(close, len(tokens), tokens, j, elements)
            # Brace initializer or aggregate: consume and look for ';'.
            j = close + 1
            continue
        if v == "[":
            j = match_bracket(tokens, j) + 1
            continue
        j += 1
    return end


def _parse_after_params(tokens, j, end, scope, text, elements, decl_start, name_segments):
    """After a parameter list: classify definition vs declaration."""
    while j < end:
        v = tokens[j].value
        if v == ";":
            _emit(elements, "func-dec", name_segments, scope, text,
                  tokens, decl_start, j)
            return j + 1
        if v == "{":
            close = match_bracket(tokens, j)
            _check_matched(close, len(tokens), tokens, j, elements)
            _emit(elements, "func-def", name_segments, scope, text,
                  tokens, decl_start, close)
            return close + 1
        if v == "=":
            if j + 1 < end and tokens[j + 1].value in ("default", "delete"):
                stop = _skip_to(tokens, j, end, ";")
                _emit(elements, "func-def", name_segments, scope, text,
                      tokens, decl_start, min(stop, end - 1))
                return stop + 1
            stop = _skip_to(tokens, j, end, ";")  # pure virtual "= 0"
            _emit(elements, "func-dec", name_segments, scope, text,
                  tokens, decl_start, min(stop, end - 1))
            return stop + 1
        if v == ":":  # constructor initializer list
            j = _skip_ctor_inits(tokens, j + 1, end)
            continue
        if v == "->":  # trailing return type
            j += 1
            continue
        if v == "noexcept" and j + 1 < end and tokens[j + 1].value == "(":
            j = match_bracket(tokens, j + 1) + 1
            continue
        if v in _POST_PARAM_OK or tokens[j].kind == "id":
            j += 1
            continue
        if v in "({[":
            j = match_bracket(tokens, j) + 1
            continue
        if v in ("<",):
            j = match_angle(tokens, j) + 1
            continue
        if v == ",":  # e.g. "void f(), g();" is rare; treat first as declaration
            _emit(elements, "func-dec", name_segments, scope, text,
                  tokens, decl_start, j - 1)
            return _skip_to(tokens, j, end, ";") + 1
        j += 1
    return end


def _skip_ctor_inits(tokens, j, end):
    """Skip "name(expr), name{expr}, ..." up to (not past) the body '{'."""
    while j < end:
        while j < end and (tokens[j].kind == "id" or tokens[j].value == "::"):
            j += 1
        if j < end and tokens[j].value == "<":
            j = match_angle(tokens, j) + 1
        if j >= end or tokens[j].value not in ("(", "{"):
            return j
        j = match_bracket(tokens, j) + 1
        if j < end and tokens[j].value == ",":
            j += 1
            continue
        return j
    return j
