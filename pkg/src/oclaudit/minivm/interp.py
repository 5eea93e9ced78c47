"""Tree-walking MiniObj interpreter.

Runtime values are tagged wrappers: Int and Real stay distinct variants,
Bool is not an Int, and object/sequence references carry heap ids from a
single id space. The interpreter reports every non-suppressed method
activation to an EventSink; the socket debug agent is one sink, in-process
test harnesses are another.
"""

from __future__ import annotations

import math
import struct
import sys
from dataclasses import dataclass

from ..values import (
    FALSE,
    NULL,
    TRUE,
    Value,
    VBool,
    VInt,
    VNull,
    VReal,
    VRef,
    VSeq,
    VStr,
    format_value,
    values_equal,
)
from . import ast

INT_MIN = -(2**63)
INT_MAX = 2**63 - 1


# --- heap ---

@dataclass
class HeapObject:
    oid: int
    class_name: str
    fields: dict[str, Value]


@dataclass
class HeapSeq:
    oid: int
    elements: list[Value]


class Heap:
    def __init__(self):
        self.entries: dict[int, HeapObject | HeapSeq] = {}
        self._next = 1

    def alloc_object(self, class_name: str, field_names) -> VRef:
        oid = self._next
        self._next += 1
        self.entries[oid] = HeapObject(oid, class_name, {n: NULL for n in field_names})
        return VRef(oid, class_name)

    def alloc_seq(self) -> VSeq:
        oid = self._next
        self._next += 1
        self.entries[oid] = HeapSeq(oid, [])
        return VSeq(oid)

    def object(self, oid: int) -> HeapObject | None:
        e = self.entries.get(oid)
        return e if isinstance(e, HeapObject) else None

    def seq(self, oid: int) -> HeapSeq | None:
        e = self.entries.get(oid)
        return e if isinstance(e, HeapSeq) else None

    def copy(self) -> "Heap":
        """Value-level snapshot; values are immutable so one level suffices."""
        h = Heap()
        h._next = self._next
        for oid, e in self.entries.items():
            if isinstance(e, HeapObject):
                h.entries[oid] = HeapObject(e.oid, e.class_name, dict(e.fields))
            else:
                h.entries[oid] = HeapSeq(e.oid, list(e.elements))
        return h


_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_U64 = 0xFFFFFFFFFFFFFFFF


def _value_bytes(v: Value) -> bytes:
    if isinstance(v, VInt):
        return b"i" + struct.pack(">q", v.v)
    if isinstance(v, VReal):
        return b"r" + struct.pack(">d", v.v)
    if isinstance(v, VBool):
        return b"b\x01" if v.v else b"b\x00"
    if isinstance(v, VStr):
        raw = v.v.encode("utf-8")
        return b"s" + struct.pack(">i", len(raw)) + raw
    if isinstance(v, VNull):
        return b"n"
    if isinstance(v, VRef):
        return b"R" + struct.pack(">q", v.oid)
    return b"Q" + struct.pack(">q", v.oid)


def heap_digest(heap: Heap, field_order: dict[str, list]) -> str:
    """FNV-1a 64 over a canonical heap serialization, as 16 hex digits.

    Entries ascend by id; object fields follow declaration order including
    inherited fields, each hashed as name then tagged value.
    """
    h = _FNV_OFFSET
    def feed(bs: bytes):
        nonlocal h
        for byte in bs:
            h = ((h ^ byte) * _FNV_PRIME) & _U64

    for oid in sorted(heap.entries):
        e = heap.entries[oid]
        if isinstance(e, HeapObject):
            feed(b"O" + struct.pack(">q", e.oid) + e.class_name.encode("utf-8"))
            for fd in field_order[e.class_name]:
                feed(fd.name.encode("utf-8"))
                feed(_value_bytes(e.fields[fd.name]))
        else:
            feed(b"S" + struct.pack(">q", e.oid))
            for el in e.elements:
                feed(_value_bytes(el))
    return format(h, "016x")


# --- events ---

@dataclass
class Activation:
    """What an EventSink learns about one method activation."""

    frame_id: int
    class_name: str  # dynamic class of the receiver
    method: str
    this: VRef
    args: tuple
    caller_class: str
    caller_method: str
    caller_line: int


class EventSink:
    """Default sink: sees everything, does nothing."""

    def vm_start(self):
        pass

    def method_entry(self, act: Activation):
        pass

    def method_exit(self, act: Activation, return_value: Value):
        pass

    def vm_death(self, exit_status: int):
        pass


# --- execution ---

class MiniRuntimeError(Exception):
    def __init__(self, message: str, line: int):
        super().__init__(f"{message} (line {line})")
        self.message = message
        self.line = line


class _Return(Exception):
    def __init__(self, value: Value):
        self.value = value


class _Frame:
    __slots__ = ("locals", "self_ref", "class_name", "method_name", "frame_id")

    def __init__(self, locals_, self_ref, class_name, method_name, frame_id):
        self.locals = locals_
        self.self_ref = self_ref
        self.class_name = class_name
        self.method_name = method_name
        self.frame_id = frame_id


class Interpreter:
    def __init__(self, program: ast.Program, sink: EventSink | None = None, out=None):
        self.program = program
        self.sink = sink or EventSink()
        self.out = out if out is not None else sys.stdout
        self.heap = Heap()
        self._next_frame_id = 1
        self._suppress = 0
        self.error: MiniRuntimeError | None = None

    def run(self) -> int:
        """Executes main; returns the process exit status (0 or 4)."""
        main = _Frame({}, None, "Main", "main", 0)
        self.sink.vm_start()
        try:
            for s in self.program.main_body:
                self._exec(s, main)
            status = 0
        except _Return:
            status = 0
        except MiniRuntimeError as e:
            self.error = e
            status = 4
        self.sink.vm_death(status)
        return status

    def heap_digest(self) -> str:
        return heap_digest(self.heap, self.program.field_order)

    def agent_invoke(self, recv: VRef, mdef: ast.MethodDef, args: list[Value]) -> Value:
        """Debugger-initiated call: runs as a nested activation with all
        entry/exit events suppressed. Purity/arity gating is the caller's job."""
        self._suppress += 1
        try:
            return self._invoke(recv, mdef, args, ("Agent", "invoke", 0))
        finally:
            self._suppress -= 1

    # --- method activation ---

    def _invoke(self, recv: VRef, mdef: ast.MethodDef, args, caller) -> Value:
        frame_id = self._next_frame_id
        self._next_frame_id += 1
        fr = _Frame(dict(zip(mdef.params, args)), recv, recv.class_name,
                    mdef.name, frame_id)
        act = None
        if self._suppress == 0:
            act = Activation(frame_id, recv.class_name, mdef.name, recv,
                             tuple(args), caller[0], caller[1], caller[2])
            self.sink.method_entry(act)
        ret: Value = NULL
        try:
            for s in mdef.body:
                self._exec(s, fr)
        except _Return as r:
            ret = r.value
        if act is not None:
            self.sink.method_exit(act, ret)
        return ret

    def _new(self, class_name: str, args, caller, line) -> VRef:
        cd = self.program.classes.get(class_name)
        if cd is None:
            raise MiniRuntimeError(f"unknown class {class_name}", line)
        names = [fd.name for fd in self.program.field_order[class_name]]
        ref = self.heap.alloc_object(class_name, names)
        init = self.program.resolve_method(class_name, "init")
        if init is not None:
            mdef, _ = init
            if len(args) != len(mdef.params):
                raise MiniRuntimeError(
                    f"arity mismatch calling 'init' (expected {len(mdef.params)},"
                    f" got {len(args)})", line)
            self._invoke(ref, mdef, args, caller)
        elif args:
            raise MiniRuntimeError(f"no constructor for {class_name}", line)
        return ref

    # --- statements ---

    def _exec(self, s, fr: _Frame):
        if isinstance(s, ast.Assign):
            v = self._eval(s.value, fr)
            t = s.target
            if isinstance(t, ast.NameTarget):
                self._assign_name(t.name, v, fr, t.line)
            else:
                self._assign_field(t, v, fr)
        elif isinstance(s, ast.If):
            c = self._eval(s.cond, fr)
            if not isinstance(c, VBool):
                raise MiniRuntimeError("condition is not a boolean", s.line)
            for x in (s.then if c.v else s.orelse):
                self._exec(x, fr)
        elif isinstance(s, ast.While):
            while True:
                c = self._eval(s.cond, fr)
                if not isinstance(c, VBool):
                    raise MiniRuntimeError("condition is not a boolean", s.line)
                if not c.v:
                    break
                for x in s.body:
                    self._exec(x, fr)
        elif isinstance(s, ast.Return):
            raise _Return(self._eval(s.value, fr) if s.value is not None else NULL)
        else:
            self._eval(s.expr, fr)

    def _assign_name(self, name: str, v: Value, fr: _Frame, line: int):
        # params and established locals win; otherwise a declared field;
        # otherwise the assignment creates a new local
        if name in fr.locals:
            fr.locals[name] = v
            return
        if fr.self_ref is not None:
            fd = self.program.declared_field(fr.class_name, name)
            if fd is not None:
                self.heap.object(fr.self_ref.oid).fields[name] = v
                return
        fr.locals[name] = v

    def _assign_field(self, t: ast.FieldTarget, v: Value, fr: _Frame):
        obj, fd = self._field_slot(t.receiver, t.name, fr, t.line)
        obj.fields[t.name] = v

    def _field_slot(self, recv_expr, name: str, fr: _Frame, line: int):
        recv = self._eval(recv_expr, fr)
        if isinstance(recv, VNull):
            raise MiniRuntimeError("null receiver", line)
        if not isinstance(recv, VRef):
            raise MiniRuntimeError("field access on a non-object value", line)
        fd = self.program.declared_field(recv.class_name, name)
        if fd is None:
            raise MiniRuntimeError(
                f"unknown field '{name}' on {recv.class_name}", line)
        if fd.visibility == "private" and not self._is_self(recv, fr):
            raise MiniRuntimeError(
                f"private field '{name}' of {recv.class_name}", line)
        return self.heap.object(recv.oid), fd

    def _is_self(self, recv: VRef, fr: _Frame) -> bool:
        return fr.self_ref is not None and fr.self_ref.oid == recv.oid

    # --- expressions ---

    def _eval(self, e, fr: _Frame) -> Value:
        if isinstance(e, ast.EInt):
            return VInt(e.value)
        if isinstance(e, ast.EReal):
            return VReal(e.value)
        if isinstance(e, ast.EBool):
            return TRUE if e.value else FALSE
        if isinstance(e, ast.EStr):
            return VStr(e.value)
        if isinstance(e, ast.ENull):
            return NULL
        if isinstance(e, ast.ESelf):
            if fr.self_ref is None:
                raise MiniRuntimeError("self outside a method", e.line)
            return fr.self_ref
        if isinstance(e, ast.EName):
            if e.name in fr.locals:
                return fr.locals[e.name]
            if fr.self_ref is not None:
                fd = self.program.declared_field(fr.class_name, e.name)
                if fd is not None:
                    return self.heap.object(fr.self_ref.oid).fields[e.name]
            raise MiniRuntimeError(f"unknown name '{e.name}'", e.line)
        if isinstance(e, ast.ENew):
            args = [self._eval(a, fr) for a in e.args]
            return self._new(e.class_name, args, self._caller(fr, e.line), e.line)
        if isinstance(e, ast.EField):
            obj, fd = self._field_slot(e.receiver, e.name, fr, e.line)
            return obj.fields[e.name]
        if isinstance(e, ast.ECall):
            return self._call(e, fr)
        if isinstance(e, ast.EUnary):
            return self._unary(e, fr)
        if isinstance(e, ast.EBin):
            return self._binary(e, fr)
        raise AssertionError(f"unhandled expression {e!r}")

    def _caller(self, fr: _Frame, line: int):
        return (fr.class_name, fr.method_name, line)

    def _call(self, e: ast.ECall, fr: _Frame) -> Value:
        if e.receiver is None:
            if e.name == "seq":
                self._need_arity(e, 0)
                return self.heap.alloc_seq()
            if e.name == "print":
                self._need_arity(e, 1)
                v = self._eval(e.args[0], fr)
                self.out.write(format_value(v) + "\n")
                return NULL
            if fr.self_ref is None:
                raise MiniRuntimeError(f"unknown function '{e.name}'", e.line)
            recv = fr.self_ref
        else:
            recv = self._eval(e.receiver, fr)
        if isinstance(recv, VSeq):
            return self._seq_call(recv, e, fr)
        if isinstance(recv, VNull):
            raise MiniRuntimeError("null receiver", e.line)
        if not isinstance(recv, VRef):
            raise MiniRuntimeError("method call on a non-object value", e.line)
        res = self.program.resolve_method(recv.class_name, e.name)
        if res is None:
            raise MiniRuntimeError(
                f"unknown method '{e.name}' on {recv.class_name}", e.line)
        mdef, _declaring = res
        if mdef.visibility == "private" and not self._is_self(recv, fr):
            raise MiniRuntimeError(
                f"private method '{e.name}' of {recv.class_name}", e.line)
        if len(e.args) != len(mdef.params):
            raise MiniRuntimeError(
                f"arity mismatch calling '{e.name}' (expected {len(mdef.params)},"
                f" got {len(e.args)})", e.line)
        args = [self._eval(a, fr) for a in e.args]
        return self._invoke(recv, mdef, args, self._caller(fr, e.line))

    def _need_arity(self, e: ast.ECall, n: int):
        if len(e.args) != n:
            raise MiniRuntimeError(
                f"arity mismatch calling '{e.name}' (expected {n},"
                f" got {len(e.args)})", e.line)

    def _seq_call(self, recv: VSeq, e: ast.ECall, fr: _Frame) -> Value:
        hs = self.heap.seq(recv.oid)
        name = e.name
        if name == "add":
            self._need_arity(e, 1)
            hs.elements.append(self._eval(e.args[0], fr))
            return NULL
        if name == "removeLast":
            self._need_arity(e, 0)
            if not hs.elements:
                raise MiniRuntimeError("removeLast on empty sequence", e.line)
            return hs.elements.pop()
        if name == "last":
            self._need_arity(e, 0)
            if not hs.elements:
                raise MiniRuntimeError("last on empty sequence", e.line)
            return hs.elements[-1]
        if name == "size":
            self._need_arity(e, 0)
            return VInt(len(hs.elements))
        if name == "get":
            self._need_arity(e, 1)
            i = self._eval(e.args[0], fr)
            if not isinstance(i, VInt):
                raise MiniRuntimeError("sequence index is not an integer", e.line)
            if not 0 <= i.v < len(hs.elements):
                raise MiniRuntimeError("index out of range", e.line)
            return hs.elements[i.v]
        if name == "set":
            self._need_arity(e, 2)
            i = self._eval(e.args[0], fr)
            v = self._eval(e.args[1], fr)
            if not isinstance(i, VInt):
                raise MiniRuntimeError("sequence index is not an integer", e.line)
            if not 0 <= i.v < len(hs.elements):
                raise MiniRuntimeError("index out of range", e.line)
            hs.elements[i.v] = v
            return NULL
        raise MiniRuntimeError(f"unknown method '{name}' on a sequence", e.line)

    def _unary(self, e: ast.EUnary, fr: _Frame) -> Value:
        v = self._eval(e.operand, fr)
        if e.op == "!":
            if not isinstance(v, VBool):
                raise MiniRuntimeError("operand of '!' is not a boolean", e.line)
            return FALSE if v.v else TRUE
        if isinstance(v, VInt):
            return VInt(self._chk_int(-v.v, e.line))
        if isinstance(v, VReal):
            return VReal(-v.v)
        raise MiniRuntimeError("numeric operand required for '-'", e.line)

    def _chk_int(self, n: int, line: int) -> int:
        if not INT_MIN <= n <= INT_MAX:
            raise MiniRuntimeError("integer overflow", line)
        return n

    def _chk_real(self, x: float, line: int) -> float:
        if not math.isfinite(x):
            raise MiniRuntimeError("non-finite real result", line)
        return x

    def _binary(self, e: ast.EBin, fr: _Frame) -> Value:
        op = e.op
        if op == "&&" or op == "||":
            left = self._eval(e.left, fr)
            if not isinstance(left, VBool):
                raise MiniRuntimeError(
                    f"operand of '{op}' is not a boolean", e.line)
            if op == "&&" and not left.v:
                return FALSE
            if op == "||" and left.v:
                return TRUE
            right = self._eval(e.right, fr)
            if not isinstance(right, VBool):
                raise MiniRuntimeError(
                    f"operand of '{op}' is not a boolean", e.line)
            return right

        a = self._eval(e.left, fr)
        b = self._eval(e.right, fr)
        if op == "==":
            return TRUE if values_equal(a, b) else FALSE
        if op == "!=":
            return FALSE if values_equal(a, b) else TRUE

        if op in ("<", "<=", ">", ">="):
            if not isinstance(a, (VInt, VReal)) or not isinstance(b, (VInt, VReal)):
                raise MiniRuntimeError(
                    f"numeric operands required for '{op}'", e.line)
            x, y = a.v, b.v
            ok = (x < y if op == "<" else x <= y if op == "<="
                  else x > y if op == ">" else x >= y)
            return TRUE if ok else FALSE

        if op == "+" and isinstance(a, VStr) and isinstance(b, VStr):
            return VStr(a.v + b.v)
        if not isinstance(a, (VInt, VReal)) or not isinstance(b, (VInt, VReal)):
            raise MiniRuntimeError(f"numeric operands required for '{op}'", e.line)

        both_int = isinstance(a, VInt) and isinstance(b, VInt)
        if op == "/":
            if both_int:
                if b.v == 0:
                    raise MiniRuntimeError("division by zero", e.line)
                q = a.v // b.v
                if (a.v % b.v != 0) and ((a.v < 0) != (b.v < 0)):
                    q += 1  # truncate toward zero
                return VInt(self._chk_int(q, e.line))
            if b.v == 0:
                raise MiniRuntimeError("division by zero", e.line)
            return VReal(self._chk_real(a.v / b.v, e.line))
        if both_int:
            n = (a.v + b.v if op == "+" else a.v - b.v if op == "-"
                 else a.v * b.v)
            return VInt(self._chk_int(n, e.line))
        x = (a.v + b.v if op == "+" else a.v - b.v if op == "-" else a.v * b.v)
        return VReal(self._chk_real(x, e.line))
