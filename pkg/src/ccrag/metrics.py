"""Completion scoring: CodeBLEU with four transparent components, and
token-level edit similarity."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

from .cpplex import strip_comments, tokenize
from .errors import ConfigError
from .lexical import tokenize_code

MAX_NGRAM = 4
DEFAULT_KEYWORD_WEIGHT = 4.0

# C++ reserved keywords (lowercased to match the code tokenizer).
CPP_KEYWORDS = frozenset(
    """
    alignas alignof and asm auto bool break case catch char class compl
    concept const consteval constexpr constinit continue decltype default
    delete do double dynamic_cast else enum explicit export extern false
    float for friend goto if inline int long mutable namespace new noexcept
    not nullptr operator or private protected public register reinterpret_cast
    requires return short signed sizeof static static_assert static_cast
    struct switch template this thread_local throw true try typedef typeid
    typename union unsigned using virtual void volatile wchar_t while xor
    """.split()
)


@dataclass(frozen=True)
class CodeBleuWeights:
    alpha: float = 0.25
    beta: float = 0.25
    gamma: float = 0.25
    delta: float = 0.25

    def __post_init__(self):
        values = (self.alpha, self.beta, self.gamma, self.delta)
        if any(v < 0 for v in values):
            raise ConfigError("weights must be non-negative")
        if abs(sum(values) - 1.0) > 1e-9:
            raise ConfigError(f"weights must sum to 1, got {sum(values)}")


@dataclass(frozen=True)
class EvalScores:
    codebleu: float
    es: float
    components: dict = field(default_factory=dict)
    flags: tuple = ()


def levenshtein(a: list, b: list) -> int:
    """Minimum single-token insertions, deletions, and substitutions."""
    if len(a) < len(b):
        a, b = b, a
    previous = list(range(len(b) + 1))
    for i, x in enumerate(a, start=1):
        current = [i]
        for j, y in enumerate(b, start=1):
            current.append(
                min(
                    previous[j] + 1,
                    current[j - 1] + 1,
                    previous[j - 1] + (x != y),
                )
            )
        previous = current
    return previous[-1]


def edit_similarity(candidate: str, reference: str) -> float:
    """1 - normalized token-level Levenshtein distance; both empty -> 1.0."""
    ca, cr = tokenize_code(candidate), tokenize_code(reference)
    longest = max(len(ca), len(cr))
    if longest == 0:
        return 1.0
    return 1.0 - levenshtein(ca, cr) / longest


def _ngrams(tokens: list, n: int) -> Counter:
    return Counter(
        tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1)
    )


def _weight(gram: tuple, keyword_set, mu: float) -> float:
    return mu if any(t in keyword_set for t in gram) else 1.0


def _precision(cand: Counter, ref: Counter, keyword_set=None, mu=1.0) -> float:
    """Clipped (optionally keyword-weighted) n-gram precision, add-one smoothed."""
    num = 0.0
    den = 0.0
    for gram, count in cand.items():
        w = _weight(gram, keyword_set, mu) if keyword_set else 1.0
        num += w * min(count, ref.get(gram, 0))
        den += w * count
    if num == 0.0:
        return (num + 1.0) / (den + 1.0)
    return num / den


def _brevity_penalty(cand_len: int, ref_len: int) -> float:
    if cand_len >= ref_len:
        return 1.0
    if cand_len == 0:
        return 0.0
    return math.exp(1.0 - ref_len / cand_len)


def _bleu(cand_tokens, ref_tokens, max_n, keyword_set=None, mu=1.0) -> float:
    if not cand_tokens and not ref_tokens:
        return 1.0
    if not cand_tokens or not ref_tokens:
        return 0.0
    log_sum = 0.0
    for n in range(1, max_n + 1):
        p = _precision(
            _ngrams(cand_tokens, n), _ngrams(ref_tokens, n), keyword_set, mu
        )
        log_sum += math.log(p)
    gm = math.exp(log_sum / max_n)
    return _brevity_penalty(len(cand_tokens), len(ref_tokens)) * gm


def ngram_match(candidate: str, reference: str, max_n: int = MAX_NGRAM) -> float:
    """BLEU-style modified n-gram precision with brevity penalty."""
    return _bleu(tokenize_code(candidate), tokenize_code(reference), max_n)


def weighted_ngram_match(
    candidate: str,
    reference: str,
    keyword_set=CPP_KEYWORDS,
    max_n: int = MAX_NGRAM,
    mu: float = DEFAULT_KEYWORD_WEIGHT,
) -> float:
    """As ngram_match, but n-grams containing a keyword count mu-fold."""
    return _bleu(
        tokenize_code(candidate), tokenize_code(reference), max_n,
        keyword_set=keyword_set, mu=mu,
    )


# ---------------------------------------------------------------------------
# Structural component: anonymized subtree matching over a tolerant parse.

def parse_tree(text: str):
    """Error-tolerant structural parse: bracket nesting plus statements.

    Leaves are (kind, value) token pairs so subtrees can be compared both
    with identifiers anonymized and with them kept.
    """
    tokens = tokenize(strip_comments(text))
    leaves = [(t.kind, t.value) for t in tokens]
    node, _ = _parse_group(leaves, 0, None)
    return node


_CLOSERS = {"{": "}", "(": ")", "[": "]"}
_GROUP_LABEL = {"{": "block", "(": "parens", "[": "brackets"}


def _parse_group(leaves, i, closer):
    children = []
    statement = []

    def flush():
        if statement:
            children.append(("stmt", tuple(statement)))
            statement.clear()

    while i < len(leaves):
        value = leaves[i][1]
        if closer is not None and value == closer:
            flush()
            return ((_label_for(closer), tuple(children)), i + 1)
        if value in _CLOSERS:
            sub, i = _parse_group(leaves, i + 1, _CLOSERS[value])
            statement.append(sub)
            if value == "{":
                flush()
            continue
        if value == ";":
            statement.append(leaves[i])
            flush()
            i += 1
            continue
        statement.append(leaves[i])
        i += 1
    flush()
    return (("unit" if closer is None else _label_for(closer), tuple(children)), i)


def _label_for(closer):
    for opener, c in _CLOSERS.items():
        if c == closer:
            return _GROUP_LABEL[opener]
    return "unit"


def _is_subnode(child) -> bool:
    # Internal nodes are (label, tuple-of-children); leaves are (kind, value).
    return isinstance(child[1], tuple)


def _subtrees(node, out):
    """Collect (height, shape, exact) for every internal node; returns height."""
    label, children = node
    heights = []
    for child in children:
        if _is_subnode(child):
            heights.append(_subtrees(child, out))
        else:
            heights.append(1)
    height = 1 + max(heights, default=0)
    out.append((height, _serialize(node, True), _serialize(node, False)))
    return height


def _serialize(node, anonymize: bool) -> str:
    label, children = node
    parts = []
    for child in children:
        if _is_subnode(child):
            parts.append(_serialize(child, anonymize))
        else:
            kind, value = child
            if not anonymize:
                parts.append(value)
            elif kind == "id" and value not in CPP_KEYWORDS:
                parts.append("id")
            elif kind == "num":
                parts.append("num")
            elif kind in ("str", "chr"):
                parts.append("str")
            else:
                parts.append(value)
    return f"({label} {' '.join(parts)})"


def _qualifying_subtrees(text: str, min_height: int = 2) -> Counter:
    """Multiset of subtree signatures, counting each subtree at two
    granularities: anonymized shape and exact token sequence."""
    out = []
    _subtrees(parse_tree(text), out)
    counts = Counter()
    for height, shape, exact in out:
        if height >= min_height:
            counts[("shape", shape)] += 1
            counts[("exact", exact)] += 1
    return counts


def ast_similarity(candidate: str, reference: str) -> tuple[float, list]:
    """Matched reference subtrees (height >= 2) over total reference
    subtrees; each subtree matched both by anonymized shape and exactly,
    so renamed-but-structurally-equal code earns partial credit.
    Returns (score, flags)."""
    ref = _qualifying_subtrees(reference)
    cand = _qualifying_subtrees(candidate)
    total = sum(ref.values())
    if total == 0:
        if sum(cand.values()) == 0 and candidate == reference:
            return 1.0, ["ast-degenerate-reference"]
        return 0.0, ["ast-degenerate-reference"]
    matched = sum((ref & cand).values())
    return matched / total, []


# ---------------------------------------------------------------------------
# Dataflow component: def-use edges with position-normalized variables.

_DECL_TYPES = {
    "int", "void", "char", "bool", "float", "double", "long", "short",
    "unsigned", "signed", "auto", "const", "size_t", "string",
}


def dataflow_edges(text: str) -> set:
    """Def-use edges (normalized var, def ordinal, use ordinal).

    A definition is an identifier followed by '=' (not '==') or introduced
    by a declaration; later occurrences are uses of the latest definition.
    Variable names are normalized by first-definition order.
    """
    tokens = [t for t in tokenize(strip_comments(text))]
    norm: dict[str, str] = {}
    def_ordinal: dict[str, int] = {}
    occurrence = 0
    edges = set()
    for i, tok in enumerate(tokens):
        if tok.kind != "id" or tok.value in CPP_KEYWORDS or tok.value in _DECL_TYPES:
            continue
        nxt = tokens[i + 1] if i + 1 < len(tokens) else None
        prv = tokens[i - 1] if i > 0 else None
        is_def = False
        if nxt is not None and nxt.value == "=" and (
            i + 2 >= len(tokens) or tokens[i + 2].value != "="
        ):
            is_def = True
        elif prv is not None and (
            prv.value in _DECL_TYPES or (prv.kind == "id" and prv.value not in CPP_KEYWORDS)
        ) and (nxt is None or nxt.value in (";", ",", ")", "=")):
            is_def = True
        if nxt is not None and nxt.value == "(":
            continue  # function call or definition, not a variable
        occurrence += 1
        if is_def:
            if tok.value not in norm:
                norm[tok.value] = f"v{len(norm)}"
            def_ordinal[tok.value] = occurrence
        elif tok.value in def_ordinal:
            edges.add((norm[tok.value], def_ordinal[tok.value], occurrence))
    return edges


def dataflow_similarity(candidate: str, reference: str) -> tuple[float, list]:
    """Matched reference def-use edges over total reference edges."""
    ref = dataflow_edges(reference)
    cand = dataflow_edges(candidate)
    if not ref:
        if not cand:
            return 1.0, ["dataflow-degenerate-reference"]
        return 0.0, ["dataflow-degenerate-reference"]
    return len(ref & cand) / len(ref), []


def codebleu(
    candidate: str,
    reference: str,
    weights: CodeBleuWeights = CodeBleuWeights(),
    keyword_set=CPP_KEYWORDS,
    mu: float = DEFAULT_KEYWORD_WEIGHT,
) -> EvalScores:
    """Weighted combination of the four components, all recorded."""
    ngram = ngram_match(candidate, reference)
    weighted = weighted_ngram_match(candidate, reference, keyword_set, mu=mu)
    ast, ast_flags = ast_similarity(candidate, reference)
    dataflow, df_flags = dataflow_similarity(candidate, reference)
    score = (
        weights.alpha * ngram
        + weights.beta * weighted
        + weights.gamma * ast
        + weights.delta * dataflow
    )
    return EvalScores(
        codebleu=score,
        es=edit_similarity(candidate, reference),
        components={
            "ngram": ngram,
            "weighted_ngram": weighted,
            "ast": ast,
            "dataflow": dataflow,
        },
        flags=tuple(ast_flags + df_flags),
    )
