"""Lexer for the constraint language.

Line comments start with `--` and run to end of line. `@pre` is a single
token; a bare `@` is a lexical error.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum, auto

from .ast import SourceSpan
from .errors import OclSyntaxError

KEYWORDS = frozenset({
    "context", "inv", "pre", "post",
    "and", "or", "xor", "implies", "not",
    "self", "result",
})

BOOL_LITERALS = frozenset({"true", "false"})


class TokenKind(Enum):
    KEYWORD = auto()
    IDENT = auto()
    INT = auto()
    REAL = auto()
    STRING = auto()
    BOOL = auto()
    OP = auto()
    PUNCT = auto()
    AT_PRE = auto()
    EOF = auto()


@dataclass(frozen=True)
class Token:
    kind: TokenKind
    text: str
    span: SourceSpan


def _is_ident_start(c: str) -> bool:
    return c.isalpha() or c == "_"


def _is_ident_char(c: str) -> bool:
    return c.isalnum() or c == "_"


def tokenize(source: str) -> list[Token]:
    """Scan source into tokens, ending with a zero-width EOF marker."""
    tokens: list[Token] = []
    i = 0
    line = 1
    col = 1
    n = len(source)

    def span(length: int) -> SourceSpan:
        return SourceSpan(line, col, length)

    def emit(kind: TokenKind, length: int) -> None:
        nonlocal i, col
        tokens.append(Token(kind, source[i:i + length], span(length)))
        i += length
        col += length

    while i < n:
        c = source[i]
        if c == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if c == "-" and i + 1 < n and source[i + 1] == "-":
            while i < n and source[i] != "\n":
                i += 1
                col += 1
            continue
        if _is_ident_start(c):
            j = i
            while j < n and _is_ident_char(source[j]):
                j += 1
            word = source[i:j]
            if word in BOOL_LITERALS:
                emit(TokenKind.BOOL, j - i)
            elif word in KEYWORDS:
                emit(TokenKind.KEYWORD, j - i)
            else:
                emit(TokenKind.IDENT, j - i)
            continue
        if c.isdigit():
            j = i
            while j < n and source[j].isdigit():
                j += 1
            if j < n and source[j] == "." and j + 1 < n and source[j + 1].isdigit():
                j += 1
                while j < n and source[j].isdigit():
                    j += 1
                emit(TokenKind.REAL, j - i)
            else:
                emit(TokenKind.INT, j - i)
            continue
        if c == "'":
            j = i + 1
            while j < n and source[j] not in "'\n":
                j += 1
            if j >= n or source[j] != "'":
                raise OclSyntaxError("unterminated string literal", span(j - i))
            emit(TokenKind.STRING, j - i + 1)
            continue
        if c == "@":
            if source[i + 1:i + 4] == "pre" and (i + 4 >= n or not _is_ident_char(source[i + 4])):
                emit(TokenKind.AT_PRE, 4)
                continue
            raise OclSyntaxError("stray '@' (did you mean '@pre'?)", span(1))
        if c == "-":
            if i + 1 < n and source[i + 1] == ">":
                emit(TokenKind.PUNCT, 2)
            else:
                emit(TokenKind.OP, 1)
            continue
        if c == "<":
            if i + 1 < n and source[i + 1] == ">":
                emit(TokenKind.OP, 2)
            elif i + 1 < n and source[i + 1] == "=":
                emit(TokenKind.OP, 2)
            else:
                emit(TokenKind.OP, 1)
            continue
        if c == ">":
            if i + 1 < n and source[i + 1] == "=":
                emit(TokenKind.OP, 2)
            else:
                emit(TokenKind.OP, 1)
            continue
        if c in "=+*/":
            emit(TokenKind.OP, 1)
            continue
        if c == ":":
            if i + 1 < n and source[i + 1] == ":":
                emit(TokenKind.PUNCT, 2)
            else:
                emit(TokenKind.PUNCT, 1)
            continue
        if c in "(),.|":
            emit(TokenKind.PUNCT, 1)
            continue
        raise OclSyntaxError(f"unexpected character {c!r}", span(1))

    tokens.append(Token(TokenKind.EOF, "", SourceSpan(line, col, 0)))
    return tokens
