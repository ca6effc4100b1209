"""Comment- and string-aware tokenizer for metric counting and shingling.

This is deliberately not a full parser: it only needs to tell apart
names, numbers, string literals, operators, and comments reliably enough
that branch keywords and comment markers inside string literals are
never miscounted. The comment prefix comes from the language profile;
string syntax is quote-based with optional triple quotes and the usual
r/b/f/u prefixes.
"""

from __future__ import annotations

import re
from dataclasses import dataclass


class LexError(ValueError):
    """Unterminated string literal in strict mode."""


NAME = "name"
NUMBER = "number"
STRING = "string"
OP = "op"
COMMENT = "comment"

_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_NUMBER_RE = re.compile(r"\d[\w.]*")
_STRING_PREFIXES = frozenset("rbfuRBFU")

# longest-match first
_MULTI_OPS = (
    "**=", "//=", ">>=", "<<=", "...",
    "==", "!=", "<=", ">=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=",
    "->", ":=", "**", "//", "<<", ">>",
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int  # 1-based line where the token starts


def tokenize(code: str, comment_prefix: str = "#", strict: bool = True) -> list[Token]:
    """Tokenize `code`; comments are emitted as COMMENT tokens.

    strict=True raises LexError on an unterminated string; strict=False
    lets the string run to end of input (good enough for counting).
    """
    tokens: list[Token] = []
    i = 0
    line = 1
    n = len(code)

    while i < n:
        ch = code[i]

        if ch == "\n":
            line += 1
            i += 1
            continue
        if ch.isspace():
            i += 1
            continue

        if comment_prefix and code.startswith(comment_prefix, i):
            end = code.find("\n", i)
            if end == -1:
                end = n
            tokens.append(Token(COMMENT, code[i:end], line))
            i = end
            continue

        if ch in "'\"":
            i, line = _consume_string(code, i, line, tokens, strict)
            continue

        m = _NAME_RE.match(code, i)
        if m:
            name = m.group(0)
            # a short prefix like r/rb/f directly attached to a quote is
            # part of the string literal
            j = m.end()
            if j < n and code[j] in "'\"" and len(name) <= 2 and all(
                c in _STRING_PREFIXES for c in name
            ):
                i, line = _consume_string(code, j, line, tokens, strict, prefix=name)
                continue
            tokens.append(Token(NAME, name, line))
            i = j
            continue

        m = _NUMBER_RE.match(code, i)
        if m:
            tokens.append(Token(NUMBER, m.group(0), line))
            i = m.end()
            continue

        for op in _MULTI_OPS:
            if code.startswith(op, i):
                tokens.append(Token(OP, op, line))
                i += len(op)
                break
        else:
            tokens.append(Token(OP, ch, line))
            i += 1

    return tokens


def _consume_string(
    code: str,
    start: int,
    line: int,
    tokens: list[Token],
    strict: bool,
    prefix: str = "",
) -> tuple[int, int]:
    """Consume a string literal starting at the quote char `code[start]`."""
    n = len(code)
    quote = code[start]
    start_line = line
    raw = "r" in prefix.lower()

    if code.startswith(quote * 3, start):
        delim = quote * 3
        i = start + 3
    else:
        delim = quote
        i = start + 1

    triple = len(delim) == 3
    while i < n:
        ch = code[i]
        if ch == "\\" and not raw and i + 1 < n:
            if code[i + 1] == "\n":
                line += 1
            i += 2
            continue
        if ch == "\n":
            if not triple:
                # string hit end of line before its closing quote
                if strict:
                    raise LexError(f"unterminated string literal on line {start_line}")
                tokens.append(Token(STRING, prefix + code[start:i], start_line))
                return i, line
            line += 1
            i += 1
            continue
        if code.startswith(delim, i):
            text = prefix + code[start : i + len(delim)]
            tokens.append(Token(STRING, text, start_line))
            return i + len(delim), line
        i += 1

    if strict:
        raise LexError(f"unterminated string literal starting on line {start_line}")
    tokens.append(Token(STRING, prefix + code[start:n], start_line))
    line += code.count("\n", start, n)
    return n, line
