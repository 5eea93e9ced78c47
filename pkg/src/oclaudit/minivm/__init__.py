"""MiniObj: a small single-threaded object language with a debuggable interpreter."""

from .ast import ClassDef, FieldDecl, InterfaceDef, MethodDef, Program
from .parser import MiniParseError, parse_program
from .purity import check_purity
from .interp import (
    Heap,
    HeapObject,
    HeapSeq,
    Interpreter,
    MiniRuntimeError,
    VBool,
    VInt,
    VNull,
    VReal,
    VRef,
    VSeq,
    VStr,
    Value,
    heap_digest,
)

__all__ = [
    "ClassDef",
    "FieldDecl",
    "Heap",
    "HeapObject",
    "HeapSeq",
    "InterfaceDef",
    "Interpreter",
    "MethodDef",
    "MiniParseError",
    "MiniRuntimeError",
    "Program",
    "VBool",
    "VInt",
    "VNull",
    "VReal",
    "VRef",
    "VSeq",
    "VStr",
    "Value",
    "check_purity",
    "heap_digest",
    "parse_program",
]
