"""Constraint expression evaluation against a live VM.

Values are the shared wire vocabulary plus Snapshot, a locally
materialized sequence (the form pre-state sequences are kept in).
Evaluation is strict about types: any mismatch raises EvalError, which
the caller turns into an ERROR verdict. Only these codes leave here:
TYPE_MISMATCH, PURITY_VIOLATION, UNKNOWN_IDENTIFIER, TARGET_EXCEPTION,
CAPTURE_MISSING.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..ocl.ast import (
    AtPre, Binary, BinOp, BoolLit, Call, CollectionOp, CollOp, Expr,
    FieldAccess, Ident, IntLit, RealLit, ResultRef, SelfRef, StrLit, Unary,
    UnaryOp,
)
from ..values import (
    FALSE, TRUE, Value, VBool, VInt, VNull, VReal, VRef, VSeq, VStr,
)
from ..wire import mirrors
from ..wire.session import Session, VmErrorReply


@dataclass(frozen=True)
class Snapshot:
    """A sequence copied out of the VM; elements are shallow (refs by id)."""
    elements: tuple[Value, ...]


@dataclass(frozen=True)
class CaptureError:
    """Recorded when a pre-state chain could not be evaluated at entry."""
    detail: str


class EvalError(Exception):
    def __init__(self, code: str, detail: str):
        super().__init__(f"{code}: {detail}")
        self.code = code
        self.detail = detail


@dataclass(frozen=True)
class ClauseOutcome:
    verdict: str  # "PASS" | "FAIL" | "ERROR"
    error_code: str | None = None
    detail: str = ""


@dataclass
class EvalEnv:
    session: Session
    catalog: dict[str, mirrors.ClassMirror]
    self_ref: VRef | None = None
    params: dict[str, Value] = field(default_factory=dict)
    result: Value | None = None
    pre_values: tuple | None = None
    chain_slots: dict[Expr, int] | None = None
    binders: dict[str, Value] = field(default_factory=dict)


def check_clause(expr: Expr, env: EvalEnv) -> ClauseOutcome:
    try:
        v = eval_value(expr, env)
    except EvalError as e:
        return ClauseOutcome("ERROR", e.code, e.detail)
    if isinstance(v, VBool):
        return ClauseOutcome("PASS" if v.v else "FAIL")
    return ClauseOutcome("ERROR", "TYPE_MISMATCH",
                         f"constraint evaluated to {_kind(v)}, not Boolean")


def eval_value(e: Expr, env: EvalEnv) -> Value | Snapshot:
    if env.chain_slots is not None:
        slot = env.chain_slots.get(e)
        if slot is not None:
            cached = env.pre_values[slot]
            if isinstance(cached, CaptureError):
                raise EvalError("CAPTURE_MISSING", cached.detail)
            return cached

    if isinstance(e, IntLit):
        return VInt(e.value)
    if isinstance(e, RealLit):
        return VReal(e.value)
    if isinstance(e, StrLit):
        return VStr(e.value)
    if isinstance(e, BoolLit):
        return TRUE if e.value else FALSE
    if isinstance(e, SelfRef):
        if env.self_ref is None:
            raise EvalError("UNKNOWN_IDENTIFIER", "self is not bound here")
        return env.self_ref
    if isinstance(e, ResultRef):
        if env.result is None:
            raise EvalError("UNKNOWN_IDENTIFIER", "result is not bound here")
        return env.result
    if isinstance(e, Ident):
        return _ident(e.name, env)
    if isinstance(e, FieldAccess):
        recv = env.self_ref if e.receiver is None else eval_value(e.receiver, env)
        return _field(recv, e.field, env)
    if isinstance(e, AtPre):
        raise EvalError("CAPTURE_MISSING",
                        "no pre-state capture covers this @pre marker")
    if isinstance(e, Call):
        return _call(e, env)
    if isinstance(e, Unary):
        return _unary(e, env)
    if isinstance(e, Binary):
        return _binary(e, env)
    if isinstance(e, CollectionOp):
        return _collection(e, env)
    raise EvalError("TYPE_MISMATCH", f"cannot evaluate {type(e).__name__}")


# --- identifiers and fields ---

def _ident(name: str, env: EvalEnv) -> Value:
    if name in env.binders:
        return env.binders[name]
    if name in env.params:
        return env.params[name]
    if env.self_ref is not None and _has_field(env, env.self_ref.class_name, name):
        return _read_field(env, env.self_ref, name)
    raise EvalError("UNKNOWN_IDENTIFIER", f"unknown identifier '{name}'")


def _has_field(env: EvalEnv, class_name: str, fname: str) -> bool:
    cm = env.catalog.get(class_name)
    while cm is not None:
        if any(f == fname for f, _vis in cm.fields):
            return True
        cm = env.catalog.get(cm.base) if cm.base else None
    return False


def _field(recv, fname: str, env: EvalEnv) -> Value:
    if recv is None:
        raise EvalError("UNKNOWN_IDENTIFIER", "no self in this context")
    if isinstance(recv, VNull):
        raise EvalError("TYPE_MISMATCH", f"field access '.{fname}' on null")
    if not isinstance(recv, VRef):
        raise EvalError("TYPE_MISMATCH",
                        f"field access '.{fname}' on {_kind(recv)}")
    if not _has_field(env, recv.class_name, fname):
        raise EvalError("UNKNOWN_IDENTIFIER",
                        f"no field '{fname}' on {recv.class_name}")
    return _read_field(env, recv, fname)


def _read_field(env: EvalEnv, ref: VRef, fname: str) -> Value:
    try:
        return mirrors.mirror_get_field(env.session, ref.oid, fname)
    except VmErrorReply as e:
        raise _map_vm_error(e) from None


# --- calls ---

_SEQ_READERS = ("size", "last", "get")
_SEQ_MUTATORS = ("add", "removeLast", "set")


def _call(e: Call, env: EvalEnv) -> Value:
    if e.receiver is None:
        if env.self_ref is None:
            raise EvalError("UNKNOWN_IDENTIFIER",
                            f"no self to receive '{e.method}()'")
        recv: Value | Snapshot = env.self_ref
    else:
        recv = eval_value(e.receiver, env)
    args = [eval_value(a, env) for a in e.args]

    if isinstance(recv, (VSeq, Snapshot)):
        return _seq_dot_call(recv, e.method, args, env)
    if isinstance(recv, VNull):
        raise EvalError("TYPE_MISMATCH", f"method call '{e.method}()' on null")
    if not isinstance(recv, VRef):
        raise EvalError("TYPE_MISMATCH",
                        f"method call '{e.method}()' on {_kind(recv)}")

    cm = env.catalog.get(recv.class_name)
    if cm is None:
        raise EvalError("TARGET_EXCEPTION",
                        f"object of unknown class {recv.class_name}")
    mm = cm.methods.get(e.method)
    if mm is None:
        raise EvalError("UNKNOWN_IDENTIFIER",
                        f"unknown method '{e.method}' on {recv.class_name}")
    if not mm.pure:
        raise EvalError("PURITY_VIOLATION",
                        f"'{recv.class_name}.{e.method}' is not pure")
    if len(args) != len(mm.params):
        raise EvalError("TYPE_MISMATCH",
                        f"'{e.method}' expects {len(mm.params)} arguments,"
                        f" got {len(args)}")
    wire_args = []
    for a in args:
        if isinstance(a, Snapshot):
            raise EvalError("TYPE_MISMATCH",
                            "a pre-state sequence cannot be a call argument")
        wire_args.append(a)
    try:
        return mirrors.mirror_invoke(env.session, recv.oid, e.method, wire_args)
    except VmErrorReply as err:
        raise _map_vm_error(err) from None


def _seq_dot_call(recv, method: str, args: list, env: EvalEnv) -> Value:
    """size/last/get are answered locally from a snapshot of the sequence."""
    if method in _SEQ_MUTATORS:
        raise EvalError("PURITY_VIOLATION",
                        f"'{method}' would mutate the sequence")
    if method not in _SEQ_READERS:
        raise EvalError("UNKNOWN_IDENTIFIER",
                        f"unknown sequence method '{method}'")
    els = _materialize(recv, env)
    if method == "size":
        if args:
            raise EvalError("TYPE_MISMATCH", "size() takes no arguments")
        return VInt(len(els))
    if method == "last":
        if args:
            raise EvalError("TYPE_MISMATCH", "last() takes no arguments")
        if not els:
            raise EvalError("TARGET_EXCEPTION", "last on empty sequence")
        return els[-1]
    # get(i), zero-based like the target language
    if len(args) != 1 or not isinstance(args[0], VInt):
        raise EvalError("TYPE_MISMATCH", "get(i) takes one Integer argument")
    i = args[0].v
    if i < 0 or i >= len(els):
        raise EvalError("TARGET_EXCEPTION", f"get({i}) out of range")
    return els[i]


# --- operators ---

def _unary(e: Unary, env: EvalEnv) -> Value:
    v = eval_value(e.operand, env)
    if e.op is UnaryOp.NOT:
        if not isinstance(v, VBool):
            raise EvalError("TYPE_MISMATCH", f"'not' applied to {_kind(v)}")
        return FALSE if v.v else TRUE
    if isinstance(v, VInt):
        return VInt(-v.v)
    if isinstance(v, VReal):
        return VReal(-v.v)
    raise EvalError("TYPE_MISMATCH", f"unary '-' applied to {_kind(v)}")


def _binary(e: Binary, env: EvalEnv) -> Value:
    op = e.op
    if op in (BinOp.AND, BinOp.OR, BinOp.IMPLIES):
        left = _want_bool(eval_value(e.left, env), str(op.value))
        if op is BinOp.AND and not left:
            return FALSE
        if op is BinOp.OR and left:
            return TRUE
        if op is BinOp.IMPLIES and not left:
            return TRUE
        right = _want_bool(eval_value(e.right, env), str(op.value))
        return TRUE if right else FALSE
    if op is BinOp.XOR:
        left = _want_bool(eval_value(e.left, env), "xor")
        right = _want_bool(eval_value(e.right, env), "xor")
        return TRUE if left != right else FALSE

    lv = eval_value(e.left, env)
    rv = eval_value(e.right, env)
    if op is BinOp.EQ:
        return TRUE if ocl_equal(lv, rv, env) else FALSE
    if op is BinOp.NE:
        return FALSE if ocl_equal(lv, rv, env) else TRUE
    if op in (BinOp.LT, BinOp.LE, BinOp.GT, BinOp.GE):
        a = _want_num(lv, op.value)
        b = _want_num(rv, op.value)
        res = {
            BinOp.LT: a < b, BinOp.LE: a <= b,
            BinOp.GT: a > b, BinOp.GE: a >= b,
        }[op]
        return TRUE if res else FALSE
    if op is BinOp.ADD and isinstance(lv, VStr) and isinstance(rv, VStr):
        return VStr(lv.v + rv.v)
    a = _want_num(lv, op.value)
    b = _want_num(rv, op.value)
    if op is BinOp.ADD:
        r = a + b
    elif op is BinOp.SUB:
        r = a - b
    elif op is BinOp.MUL:
        r = a * b
    else:  # DIV always yields Real
        if b == 0:
            raise EvalError("TARGET_EXCEPTION", "division by zero")
        return VReal(a / b)
    if isinstance(lv, VInt) and isinstance(rv, VInt):
        return VInt(r)
    return VReal(float(r))


def _want_bool(v, opname: str) -> bool:
    if not isinstance(v, VBool):
        raise EvalError("TYPE_MISMATCH",
                        f"'{opname}' needs Boolean operands, got {_kind(v)}")
    return v.v


def _want_num(v, opname: str):
    if isinstance(v, (VInt, VReal)):
        return v.v
    raise EvalError("TYPE_MISMATCH",
                    f"'{opname}' needs numeric operands, got {_kind(v)}")


# --- collections ---

def _materialize(v, env: EvalEnv) -> tuple[Value, ...]:
    if isinstance(v, Snapshot):
        return v.elements
    try:
        return mirrors.mirror_seq_snapshot(env.session, v.oid)
    except VmErrorReply as e:
        raise _map_vm_error(e) from None


def _collection(e: CollectionOp, env: EvalEnv) -> Value:
    recv = eval_value(e.receiver, env)
    if not isinstance(recv, (VSeq, Snapshot)):
        raise EvalError("TYPE_MISMATCH",
                        f"'->{e.op.value}' needs a sequence, got {_kind(recv)}")
    op = e.op
    if op in (CollOp.FOR_ALL, CollOp.EXISTS):
        els = _materialize(recv, env)
        body = e.args[0]
        name = e.binder
        shadowed = name in env.binders
        saved = env.binders.get(name)
        try:
            for el in els:
                env.binders[name] = el
                got = eval_value(body, env)
                if not isinstance(got, VBool):
                    raise EvalError(
                        "TYPE_MISMATCH",
                        f"'->{op.value}' body must be Boolean, got {_kind(got)}")
                if op is CollOp.FOR_ALL and not got.v:
                    return FALSE
                if op is CollOp.EXISTS and got.v:
                    return TRUE
        finally:
            if shadowed:
                env.binders[name] = saved
            else:
                env.binders.pop(name, None)
        return TRUE if op is CollOp.FOR_ALL else FALSE

    els = _materialize(recv, env)
    if op is CollOp.SIZE:
        return VInt(len(els))
    if op is CollOp.IS_EMPTY:
        return TRUE if not els else FALSE
    if op is CollOp.NOT_EMPTY:
        return TRUE if els else FALSE
    if op is CollOp.INCLUDES:
        probe = eval_value(e.args[0], env)
        for el in els:
            if ocl_equal(el, probe, env):
                return TRUE
        return FALSE
    # at(i), one-based
    idx = eval_value(e.args[0], env)
    if not isinstance(idx, VInt):
        raise EvalError("TYPE_MISMATCH", "'->at' takes an Integer index")
    i = idx.v
    if i < 1 or i > len(els):
        raise EvalError("TARGET_EXCEPTION", f"at({i}) out of range")
    return els[i - 1]


def ocl_equal(a, b, env: EvalEnv, _depth: int = 0) -> bool:
    """Constraint-language '='. Unrelated kinds are a type error, except
    Null, which is simply unequal to everything but Null. Sequences compare
    element-wise at top level; nested sequence elements compare by id."""
    a_null = isinstance(a, VNull)
    b_null = isinstance(b, VNull)
    if a_null or b_null:
        return a_null and b_null
    if isinstance(a, (VInt, VReal)) and isinstance(b, (VInt, VReal)):
        return a.v == b.v
    if isinstance(a, VBool) and isinstance(b, VBool):
        return a.v == b.v
    if isinstance(a, VStr) and isinstance(b, VStr):
        return a.v == b.v
    if isinstance(a, VRef) and isinstance(b, VRef):
        return a.oid == b.oid
    a_seq = isinstance(a, (VSeq, Snapshot))
    b_seq = isinstance(b, (VSeq, Snapshot))
    if a_seq and b_seq:
        if _depth > 0:
            return (isinstance(a, VSeq) and isinstance(b, VSeq)
                    and a.oid == b.oid)
        if isinstance(a, VSeq) and isinstance(b, VSeq) and a.oid == b.oid:
            return True
        ea = _materialize(a, env)
        eb = _materialize(b, env)
        if len(ea) != len(eb):
            return False
        return all(ocl_equal(x, y, env, _depth=1) for x, y in zip(ea, eb))
    raise EvalError("TYPE_MISMATCH",
                    f"cannot compare {_kind(a)} = {_kind(b)}")


# --- pre-state capture ---

def strip_atpre(e: Expr) -> Expr:
    """The same expression with every @pre marker removed."""
    if isinstance(e, AtPre):
        return strip_atpre(e.inner)
    if isinstance(e, FieldAccess):
        recv = None if e.receiver is None else strip_atpre(e.receiver)
        return FieldAccess(recv, e.field)
    if isinstance(e, Call):
        recv = None if e.receiver is None else strip_atpre(e.receiver)
        return Call(recv, e.method, tuple(strip_atpre(a) for a in e.args))
    if isinstance(e, Unary):
        return Unary(e.op, strip_atpre(e.operand))
    if isinstance(e, Binary):
        return Binary(e.op, strip_atpre(e.left), strip_atpre(e.right))
    if isinstance(e, CollectionOp):
        return CollectionOp(strip_atpre(e.receiver), e.op, e.binder,
                            tuple(strip_atpre(a) for a in e.args))
    return e


def capture_pre_values(chains, entry_env: EvalEnv) -> tuple:
    """Evaluates each chain at method entry. Sequence results are copied
    into snapshots; failures become markers that surface as
    CAPTURE_MISSING when the postcondition is checked."""
    out = []
    for chain in chains:
        try:
            v = eval_value(strip_atpre(chain), entry_env)
        except EvalError as e:
            out.append(CaptureError(
                f"pre-state capture failed: {e.detail}"))
            continue
        if isinstance(v, VSeq):
            try:
                v = Snapshot(mirrors.mirror_seq_snapshot(
                    entry_env.session, v.oid))
            except VmErrorReply as e:
                out.append(CaptureError(
                    f"pre-state capture failed: {e.msg}"))
                continue
        out.append(v)
    return tuple(out)


# --- helpers ---

def _map_vm_error(e: VmErrorReply) -> EvalError:
    code = {
        "TARGET_EXCEPTION": "TARGET_EXCEPTION",
        "PURITY": "PURITY_VIOLATION",
        "UNKNOWN_METHOD": "UNKNOWN_IDENTIFIER",
        "UNKNOWN_FIELD": "UNKNOWN_IDENTIFIER",
        "ARITY": "TYPE_MISMATCH",
    }.get(e.code, "TARGET_EXCEPTION")
    return EvalError(code, e.msg)


def _kind(v) -> str:
    return {
        VInt: "Integer", VReal: "Real", VBool: "Boolean", VStr: "String",
        VNull: "Null", VRef: "an object", VSeq: "a sequence",
        Snapshot: "a sequence snapshot",
    }[type(v)]
