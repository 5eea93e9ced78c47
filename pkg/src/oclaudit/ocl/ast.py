"""AST node types for the constraint language.

Spans are excluded from equality and hashing so structurally identical
expressions compare equal regardless of where they appeared in the source.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Union


@dataclass(frozen=True)
class SourceSpan:
    line: int
    column: int
    length: int

    def __str__(self) -> str:
        return f"line {self.line} col {self.column}"


SPAN0 = SourceSpan(1, 1, 0)


class UnaryOp(Enum):
    NOT = "not"
    NEG = "-"


class BinOp(Enum):
    IMPLIES = "implies"
    XOR = "xor"
    OR = "or"
    AND = "and"
    EQ = "="
    NE = "<>"
    LT = "<"
    LE = "<="
    GT = ">"
    GE = ">="
    ADD = "+"
    SUB = "-"
    MUL = "*"
    DIV = "/"


class CollOp(Enum):
    SIZE = "size"
    IS_EMPTY = "isEmpty"
    NOT_EMPTY = "notEmpty"
    INCLUDES = "includes"
    AT = "at"
    FOR_ALL = "forAll"
    EXISTS = "exists"


#: Collection operations that take a binder and a body expression.
QUANTIFIERS = (CollOp.FOR_ALL, CollOp.EXISTS)


@dataclass(frozen=True)
class IntLit:
    value: int
    span: SourceSpan = field(default=SPAN0, compare=False)


@dataclass(frozen=True)
class RealLit:
    value: float
    span: SourceSpan = field(default=SPAN0, compare=False)


@dataclass(frozen=True)
class StrLit:
    value: str
    span: SourceSpan = field(default=SPAN0, compare=False)


@dataclass(frozen=True)
class BoolLit:
    value: bool
    span: SourceSpan = field(default=SPAN0, compare=False)


@dataclass(frozen=True)
class SelfRef:
    span: SourceSpan = field(default=SPAN0, compare=False)


@dataclass(frozen=True)
class ResultRef:
    span: SourceSpan = field(default=SPAN0, compare=False)


@dataclass(frozen=True)
class Ident:
    name: str
    span: SourceSpan = field(default=SPAN0, compare=False)


@dataclass(frozen=True)
class FieldAccess:
    receiver: "Expr | None"
    field: str
    span: SourceSpan = field(default=SPAN0, compare=False)


@dataclass(frozen=True)
class Call:
    receiver: "Expr | None"
    method: str
    args: tuple["Expr", ...]
    span: SourceSpan = field(default=SPAN0, compare=False)


@dataclass(frozen=True)
class AtPre:
    inner: "Expr"
    span: SourceSpan = field(default=SPAN0, compare=False)


@dataclass(frozen=True)
class Unary:
    op: UnaryOp
    operand: "Expr"
    span: SourceSpan = field(default=SPAN0, compare=False)


@dataclass(frozen=True)
class Binary:
    op: BinOp
    left: "Expr"
    right: "Expr"
    span: SourceSpan = field(default=SPAN0, compare=False)


@dataclass(frozen=True)
class CollectionOp:
    receiver: "Expr"
    op: CollOp
    binder: str | None
    args: tuple["Expr", ...]
    span: SourceSpan = field(default=SPAN0, compare=False)


Expr = Union[
    IntLit, RealLit, StrLit, BoolLit, SelfRef, ResultRef, Ident,
    FieldAccess, Call, AtPre, Unary, Binary, CollectionOp,
]


def children(e: Expr) -> tuple[Expr, ...]:
    """All direct subexpressions of a node, receiver first."""
    if isinstance(e, FieldAccess):
        return () if e.receiver is None else (e.receiver,)
    if isinstance(e, Call):
        recv = () if e.receiver is None else (e.receiver,)
        return recv + e.args
    if isinstance(e, AtPre):
        return (e.inner,)
    if isinstance(e, Unary):
        return (e.operand,)
    if isinstance(e, Binary):
        return (e.left, e.right)
    if isinstance(e, CollectionOp):
        return (e.receiver,) + e.args
    return ()


def receiver_of(e: Expr) -> Expr | None:
    """The navigation-chain child of a postfix node, if any."""
    if isinstance(e, (FieldAccess, Call)):
        return e.receiver
    if isinstance(e, CollectionOp):
        return e.receiver
    if isinstance(e, AtPre):
        return e.inner
    return None


def contains_atpre(e: Expr) -> bool:
    if isinstance(e, AtPre):
        return True
    return any(contains_atpre(c) for c in children(e))


class ClauseKind(Enum):
    INV = "inv"
    PRE = "pre"
    POST = "post"


@dataclass(frozen=True)
class Param:
    name: str
    type_name: str


@dataclass(frozen=True)
class MethodSig:
    name: str
    params: tuple[Param, ...]
    return_type: str | None


@dataclass(frozen=True)
class Clause:
    kind: ClauseKind
    label: str | None
    expr: Expr
    origin: SourceSpan = field(default=SPAN0, compare=False)


@dataclass(frozen=True)
class ContextDecl:
    class_name: str
    method: MethodSig | None
    clauses: tuple[Clause, ...]

    @property
    def param_names(self) -> tuple[str, ...]:
        if self.method is None:
            return ()
        return tuple(p.name for p in self.method.params)


@dataclass(frozen=True)
class ConstraintFile:
    decls: tuple[ContextDecl, ...]
    source_name: str = "<string>"
