"""Canonical text rendering of constraint expressions.

Parentheses are emitted only where precedence or non-associativity
requires them, so parsing the output reproduces the input structurally.
"""
from __future__ import annotations

from .ast import (
    AtPre,
    Binary,
    BinOp,
    BoolLit,
    Call,
    CollectionOp,
    Expr,
    FieldAccess,
    Ident,
    IntLit,
    QUANTIFIERS,
    RealLit,
    ResultRef,
    SelfRef,
    StrLit,
    Unary,
    UnaryOp,
)

_LEVEL = {
    BinOp.IMPLIES: 1,
    BinOp.XOR: 2,
    BinOp.OR: 3,
    BinOp.AND: 4,
    BinOp.EQ: 5, BinOp.NE: 5, BinOp.LT: 5, BinOp.LE: 5, BinOp.GT: 5, BinOp.GE: 5,
    BinOp.ADD: 6, BinOp.SUB: 6,
    BinOp.MUL: 7, BinOp.DIV: 7,
}
_UNARY_LEVEL = 8
_POSTFIX_LEVEL = 9
_ATOM_LEVEL = 10
_RELATIONAL = frozenset({BinOp.EQ, BinOp.NE, BinOp.LT, BinOp.LE, BinOp.GT, BinOp.GE})


def _level(e: Expr) -> int:
    if isinstance(e, Binary):
        return _LEVEL[e.op]
    if isinstance(e, Unary):
        return _UNARY_LEVEL
    if isinstance(e, (FieldAccess, Call, CollectionOp, AtPre)):
        return _POSTFIX_LEVEL
    return _ATOM_LEVEL


def _fmt(e: Expr, required: int) -> str:
    text = _render(e)
    if _level(e) < required:
        return f"({text})"
    return text


def _render(e: Expr) -> str:
    if isinstance(e, IntLit):
        return str(e.value)
    if isinstance(e, RealLit):
        return repr(e.value)
    if isinstance(e, StrLit):
        return f"'{e.value}'"
    if isinstance(e, BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, SelfRef):
        return "self"
    if isinstance(e, ResultRef):
        return "result"
    if isinstance(e, Ident):
        return e.name
    if isinstance(e, FieldAccess):
        if e.receiver is None:
            return e.field
        return f"{_fmt(e.receiver, _POSTFIX_LEVEL)}.{e.field}"
    if isinstance(e, Call):
        args = ", ".join(_fmt(a, 1) for a in e.args)
        if e.receiver is None:
            return f"{e.method}({args})"
        return f"{_fmt(e.receiver, _POSTFIX_LEVEL)}.{e.method}({args})"
    if isinstance(e, AtPre):
        inner = e.inner
        if isinstance(inner, Call):
            args = ", ".join(_fmt(a, 1) for a in inner.args)
            if inner.receiver is None:
                return f"{inner.method}@pre({args})"
            return f"{_fmt(inner.receiver, _POSTFIX_LEVEL)}.{inner.method}@pre({args})"
        return f"{_render(inner)}@pre"
    if isinstance(e, Unary):
        if e.op is UnaryOp.NOT:
            return f"not {_fmt(e.operand, _UNARY_LEVEL)}"
        operand = _fmt(e.operand, _UNARY_LEVEL)
        if operand.startswith("-"):
            # adjacent minus signs would lex as a comment marker
            return f"-({operand})"
        return f"-{operand}"
    if isinstance(e, Binary):
        lvl = _LEVEL[e.op]
        left_req = lvl + 1 if e.op in _RELATIONAL else lvl
        left = _fmt(e.left, left_req)
        right = _fmt(e.right, lvl + 1)
        return f"{left} {e.op.value} {right}"
    if isinstance(e, CollectionOp):
        recv = _fmt(e.receiver, _POSTFIX_LEVEL)
        if e.op in QUANTIFIERS:
            return f"{recv}->{e.op.value}({e.binder} | {_fmt(e.args[0], 1)})"
        args = ", ".join(_fmt(a, 1) for a in e.args)
        return f"{recv}->{e.op.value}({args})"
    raise TypeError(f"not an expression node: {e!r}")


def format_expr(e: Expr) -> str:
    """Render an expression with minimal parentheses."""
    return _fmt(e, 1)
