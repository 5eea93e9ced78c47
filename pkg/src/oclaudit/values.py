"""Runtime value vocabulary shared by the VM, the wire codec, and mirrors.

Int and Real are deliberately distinct variants; Bool is not an Int.
References carry heap ids from the VM's single id space and compare by id.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True, slots=True)
class VInt:
    v: int


@dataclass(frozen=True, slots=True)
class VReal:
    v: float


@dataclass(frozen=True, slots=True)
class VBool:
    v: bool


@dataclass(frozen=True, slots=True)
class VStr:
    v: str


@dataclass(frozen=True, slots=True)
class VNull:
    pass


@dataclass(frozen=True, slots=True)
class VRef:
    oid: int
    class_name: str


@dataclass(frozen=True, slots=True)
class VSeq:
    oid: int


Value = VInt | VReal | VBool | VStr | VNull | VRef | VSeq

NULL = VNull()
TRUE = VBool(True)
FALSE = VBool(False)


def format_value(v: Value) -> str:
    """How print() renders a value; Reals use shortest round-trip form."""
    if isinstance(v, VInt):
        return str(v.v)
    if isinstance(v, VReal):
        return repr(v.v)
    if isinstance(v, VBool):
        return "true" if v.v else "false"
    if isinstance(v, VStr):
        return v.v
    if isinstance(v, VNull):
        return "null"
    if isinstance(v, VRef):
        return f"{v.class_name}#{v.oid}"
    return f"seq#{v.oid}"


def values_equal(a: Value, b: Value) -> bool:
    """== semantics: mixed kinds are unequal, except Int/Real compare
    numerically; references compare by id."""
    if isinstance(a, VInt) and isinstance(b, VInt):
        return a.v == b.v
    if isinstance(a, (VInt, VReal)) and isinstance(b, (VInt, VReal)):
        return a.v == b.v
    if isinstance(a, VBool) and isinstance(b, VBool):
        return a.v == b.v
    if isinstance(a, VStr) and isinstance(b, VStr):
        return a.v == b.v
    if isinstance(a, VNull) and isinstance(b, VNull):
        return True
    if isinstance(a, VRef) and isinstance(b, VRef):
        return a.oid == b.oid
    if isinstance(a, VSeq) and isinstance(b, VSeq):
        return a.oid == b.oid
    return False
