"""Static code characteristics: LOC, cyclomatic complexity, API calls,
comment lines, and token counts.

All counters are rule-based over the shared lexer rather than a full
AST, so they work on any snippet the profile's comment/string syntax
covers, including snippets that would not parse. The exact rules:

* LOC: physical lines that are non-blank and not comment-only.
* Cyclomatic complexity: 1 + occurrences of the profile's branch tokens
  (`if`, `elif`, `for`, `while`, `and`, `or`, `except` by default)
  outside strings and comments. Ternary and comprehension `if` count
  like any other; `else` adds nothing.
* API calls: call sites `name(` or `expr.name(` whose callee name is
  not defined in the snippet itself (no local `def`/`class` of that
  name, not an assignment or loop target). Built-ins and imported
  names therefore count.
* Comment lines: lines that are comment-only plus lines carrying an
  inline trailing comment, one per line; comment markers inside string
  literals never count.
* Tokens: maximal runs of word characters, with every other
  non-whitespace character a token of its own ("f(x)=1" -> 6).

Only cyclomatic complexity and API counting require a clean lex; on an
unterminated string they raise LexError, which `compute_metrics` turns
into an absent metric instead of a crash.
"""

from __future__ import annotations

import re
from typing import Optional

from .lexer import COMMENT, NAME, OP, LexError, Token, tokenize
from .model import CodeMetrics, LanguageProfile, MetricsDelta

_DEFAULT_PROFILE = LanguageProfile()

# names that can precede "(" without being a call
_CALLEE_EXCLUDED_KEYWORDS = frozenset(
    """False None True and as assert async await break class continue def del
    elif else except finally for from global if import in is lambda nonlocal
    not or pass raise return try while with yield""".split()
)

_WORD_OR_PUNCT = re.compile(r"[A-Za-z0-9_]+|[^\sA-Za-z0-9_]")


def count_loc(code: str, profile: LanguageProfile = _DEFAULT_PROFILE) -> int:
    count = 0
    for line in code.splitlines():
        stripped = line.strip()
        if stripped and not stripped.startswith(profile.comment_prefix):
            count += 1
    return count


def cyclomatic_complexity(code: str, profile: LanguageProfile = _DEFAULT_PROFILE) -> int:
    """1 + number of decision points. Raises LexError on unlexable code."""
    branch_tokens = set(profile.branch_tokens)
    tokens = tokenize(code, profile.comment_prefix, strict=True)
    return 1 + sum(1 for t in tokens if t.kind == NAME and t.text in branch_tokens)


def count_comments(code: str, profile: LanguageProfile = _DEFAULT_PROFILE) -> int:
    """Lines containing a comment (full-line or inline), counted once each."""
    tokens = tokenize(code, profile.comment_prefix, strict=False)
    return len({t.line for t in tokens if t.kind == COMMENT})


def count_api_calls(code: str, profile: LanguageProfile = _DEFAULT_PROFILE) -> int:
    """Call sites whose callee is not defined within the snippet."""
    tokens = [
        t for t in tokenize(code, profile.comment_prefix, strict=True)
        if t.kind != COMMENT
    ]
    defined = _defined_names(tokens)

    calls = 0
    for i, tok in enumerate(tokens):
        if tok.kind != NAME or tok.text in _CALLEE_EXCLUDED_KEYWORDS:
            continue
        nxt = tokens[i + 1] if i + 1 < len(tokens) else None
        if nxt is None or nxt.kind != OP or nxt.text != "(":
            continue
        prev = tokens[i - 1] if i > 0 else None
        if prev is not None and prev.kind == NAME and prev.text in ("def", "class"):
            continue
        if tok.text not in defined:
            calls += 1
    return calls


def _defined_names(tokens: list[Token]) -> set[str]:
    """Names bound in the snippet: def/class names, assignment targets at
    bracket depth zero, walrus targets, and loop variables."""
    defined: set[str] = set()
    depth = 0
    line_start = 0  # index of first token on the current line
    current_line = tokens[0].line if tokens else 0

    for i, tok in enumerate(tokens):
        if tok.line != current_line and depth == 0:
            current_line = tok.line
            line_start = i
        if tok.kind == OP:
            if tok.text in "([{":
                depth += 1
            elif tok.text in ")]}":
                depth = max(0, depth - 1)
            elif tok.text == "=" and depth == 0:
                for prev in tokens[line_start:i]:
                    if prev.kind == NAME and prev.text not in _CALLEE_EXCLUDED_KEYWORDS:
                        defined.add(prev.text)
                # attribute targets like obj.attr = v: drop the attr again
                for j in range(line_start + 1, i):
                    if tokens[j].kind == NAME and tokens[j - 1].text == ".":
                        defined.discard(tokens[j].text)
            elif tok.text == ":=" and i > 0 and tokens[i - 1].kind == NAME:
                defined.add(tokens[i - 1].text)
        elif tok.kind == NAME:
            if tok.text in ("def", "class"):
                if i + 1 < len(tokens) and tokens[i + 1].kind == NAME:
                    defined.add(tokens[i + 1].text)
            elif tok.text == "for":
                j = i + 1
                while j < len(tokens) and not (
                    tokens[j].kind == NAME and tokens[j].text == "in"
                ):
                    if tokens[j].kind == NAME and tokens[j - 1].text != ".":
                        defined.add(tokens[j].text)
                    j += 1
    return defined


def count_tokens(text: str) -> int:
    """Whitespace-delimited segments split further at punctuation."""
    return len(_WORD_OR_PUNCT.findall(text))


def metrics_delta(candidate: CodeMetrics, canonical: CodeMetrics) -> Optional[MetricsDelta]:
    """Componentwise candidate - canonical; None when either side is absent."""
    sides = (
        candidate.cyclomatic_complexity, candidate.api_calls,
        canonical.cyclomatic_complexity, canonical.api_calls,
    )
    if any(v is None for v in sides):
        return None
    return MetricsDelta(
        d_loc=candidate.loc - canonical.loc,
        d_cc=candidate.cyclomatic_complexity - canonical.cyclomatic_complexity,
        d_api=candidate.api_calls - canonical.api_calls,
    )


def compute_metrics(code: str, profile: LanguageProfile = _DEFAULT_PROFILE) -> CodeMetrics:
    """All metrics for one snippet; unlexable code yields absent cc/api."""
    try:
        cc: Optional[int] = cyclomatic_complexity(code, profile)
    except LexError:
        cc = None
    try:
        api: Optional[int] = count_api_calls(code, profile)
    except LexError:
        api = None
    return CodeMetrics(
        loc=count_loc(code, profile),
        cyclomatic_complexity=cc,
        api_calls=api,
        comment_lines=count_comments(code, profile),
        tokens=count_tokens(code),
    )
