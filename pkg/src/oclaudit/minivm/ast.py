"""Syntax tree for MiniObj programs.

Nodes carry the 1-based source line they start on; that line is what
runtime diagnostics and caller triples report.
"""

from __future__ import annotations

from dataclasses import dataclass, field


# --- declarations ---

@dataclass
class FieldDecl:
    name: str
    visibility: str  # "public" | "private"
    line: int


@dataclass
class MethodDef:
    name: str
    params: list[str]
    pure: bool
    visibility: str
    body: list  # statements
    line: int


@dataclass
class MethodSig:
    """Interface member: a signature with no body."""

    name: str
    params: list[str]
    pure: bool
    line: int


@dataclass
class ClassDef:
    name: str
    base: str | None
    interfaces: list[str]
    fields: list[FieldDecl]
    methods: dict[str, MethodDef]
    line: int


@dataclass
class InterfaceDef:
    name: str
    sigs: dict[str, MethodSig]
    line: int


@dataclass
class Program:
    classes: dict[str, ClassDef]
    interfaces: dict[str, InterfaceDef]
    main_body: list
    # flattened field order per class, base classes first; computed at link time
    field_order: dict[str, list[FieldDecl]] = field(default_factory=dict)

    def resolve_method(self, class_name: str, method: str):
        """Dynamic dispatch: first definition found walking the chain upward.

        Returns (MethodDef, declaring class name) or None.
        """
        cur = class_name
        while cur is not None:
            cd = self.classes[cur]
            m = cd.methods.get(method)
            if m is not None:
                return m, cur
            cur = cd.base
        return None

    def declared_field(self, class_name: str, name: str) -> FieldDecl | None:
        for fd in self.field_order.get(class_name, ()):
            if fd.name == name:
                return fd
        return None

    def chain(self, class_name: str) -> list[str]:
        """Root-most ancestor first, the class itself last."""
        out = []
        cur = class_name
        while cur is not None:
            out.append(cur)
            cur = self.classes[cur].base
        out.reverse()
        return out


# --- statements ---

@dataclass
class Assign:
    # target is NameTarget or FieldTarget
    target: object
    value: object
    line: int


@dataclass
class NameTarget:
    name: str
    line: int


@dataclass
class FieldTarget:
    receiver: object
    name: str
    line: int


@dataclass
class If:
    cond: object
    then: list
    orelse: list
    line: int


@dataclass
class While:
    cond: object
    body: list
    line: int


@dataclass
class Return:
    value: object | None
    line: int


@dataclass
class ExprStmt:
    expr: object
    line: int


# --- expressions ---

@dataclass
class EInt:
    value: int
    line: int


@dataclass
class EReal:
    value: float
    line: int


@dataclass
class EBool:
    value: bool
    line: int


@dataclass
class EStr:
    value: str
    line: int


@dataclass
class ENull:
    line: int


@dataclass
class ESelf:
    line: int


@dataclass
class EName:
    name: str
    line: int


@dataclass
class ENew:
    class_name: str
    args: list
    line: int


@dataclass
class EField:
    receiver: object
    name: str
    line: int


@dataclass
class ECall:
    receiver: object | None  # None: self-call or free built-in (seq/print)
    name: str
    args: list
    line: int


@dataclass
class EUnary:
    op: str  # "!" | "-"
    operand: object
    line: int


@dataclass
class EBin:
    op: str  # && || == != < <= > >= + - * /
    left: object
    right: object
    line: int
