"""Message catalog and value codec for the debug wire protocol."""

from __future__ import annotations

from ..values import (
    NULL,
    Value,
    VBool,
    VInt,
    VNull,
    VReal,
    VRef,
    VSeq,
    VStr,
)

COMMANDS = frozenset({
    "ListClasses", "ClassInfo", "SetEventPolicy", "Resume", "Suspend",
    "ReadField", "ReadSeq", "InvokeMethod", "HeapDigest", "Disconnect",
})

REPLIES = frozenset({
    "Ok", "Error", "ClassList", "ClassInfoReply", "ValueReply", "SeqReply",
    "DigestReply",
})

EVENTS = frozenset({"VmStart", "MethodEntry", "MethodExit", "VmDeath"})

KNOWN_TYPES = COMMANDS | REPLIES | EVENTS | {"EventSet"}

# Closed error taxonomy; peers sending anything else get mapped to a
# generic protocol error on the receiving side.
ERROR_CODES = (
    "NOT_SUSPENDED",
    "UNKNOWN_OBJECT",
    "UNKNOWN_CLASS",
    "UNKNOWN_METHOD",
    "UNKNOWN_FIELD",
    "PURITY",
    "ARITY",
    "UNKNOWN_TYPE",
    "TARGET_EXCEPTION",
)

# Payload fields each type must carry (besides "id" on commands/replies).
_REQUIRED: dict[str, tuple[str, ...]] = {
    "ListClasses": (),
    "ClassInfo": ("class",),
    "SetEventPolicy": ("classes", "entry", "exit"),
    "Resume": (),
    "Suspend": (),
    "ReadField": ("objId", "field"),
    "ReadSeq": ("seqId",),
    "InvokeMethod": ("objId", "method", "args"),
    "HeapDigest": (),
    "Disconnect": (),
    "Ok": (),
    "Error": ("code", "msg"),
    "ClassList": ("classes",),
    "ClassInfoReply": ("name", "base", "interfaces", "fields", "methods"),
    "ValueReply": ("value",),
    "SeqReply": ("elements",),
    "DigestReply": ("hex64",),
    "EventSet": ("suspend", "events"),
    "VmStart": (),
    # thisId is optional on entry/exit events
    "MethodEntry": ("frameId", "class", "method", "args",
                    "callerClass", "callerMethod", "callerLine"),
    "MethodExit": ("frameId", "class", "method", "args",
                   "callerClass", "callerMethod", "callerLine", "returnValue"),
    "VmDeath": ("exitStatus", "entryCount"),
}


def missing_fields(msg: dict) -> tuple[str, ...]:
    """Names of required payload fields absent from a known-type message."""
    t = msg.get("type")
    need = _REQUIRED.get(t, ())
    return tuple(k for k in need if k not in msg)


class ValueCodecError(Exception):
    pass


def encode_value(v: Value) -> dict:
    if isinstance(v, VInt):
        return {"k": "int", "v": v.v}
    if isinstance(v, VReal):
        return {"k": "real", "v": v.v}
    if isinstance(v, VBool):
        return {"k": "bool", "v": v.v}
    if isinstance(v, VStr):
        return {"k": "str", "v": v.v}
    if isinstance(v, VNull):
        return {"k": "null"}
    if isinstance(v, VRef):
        return {"k": "ref", "id": v.oid, "class": v.class_name}
    if isinstance(v, VSeq):
        return {"k": "seq", "id": v.oid}
    raise ValueCodecError(f"not a value: {v!r}")


def decode_value(d: object) -> Value:
    if not isinstance(d, dict):
        raise ValueCodecError("value is not an object")
    k = d.get("k")
    if k == "int":
        v = d.get("v")
        if isinstance(v, int) and not isinstance(v, bool):
            return VInt(v)
    elif k == "real":
        v = d.get("v")
        if isinstance(v, (int, float)) and not isinstance(v, bool):
            return VReal(float(v))
    elif k == "bool":
        v = d.get("v")
        if isinstance(v, bool):
            return VBool(v)
    elif k == "str":
        v = d.get("v")
        if isinstance(v, str):
            return VStr(v)
    elif k == "null":
        return NULL
    elif k == "ref":
        oid, cls = d.get("id"), d.get("class")
        if isinstance(oid, int) and not isinstance(oid, bool) and isinstance(cls, str):
            return VRef(oid, cls)
    elif k == "seq":
        oid = d.get("id")
        if isinstance(oid, int) and not isinstance(oid, bool):
            return VSeq(oid)
    raise ValueCodecError(f"badly shaped value: {d!r}")
