"""Remote-object views used by the constraint evaluator.

Mirrors are plain data fetched over a Session; they never cache field
values, only structure (class shape is fixed for a VM's lifetime).
"""

from __future__ import annotations

from dataclasses import dataclass

from ..values import Value
from .protocol import decode_value, encode_value
from .session import Session


@dataclass(frozen=True)
class MethodMirror:
    name: str
    params: tuple[str, ...]
    pure: bool
    visibility: str
    declaring: str


@dataclass(frozen=True)
class ClassMirror:
    name: str
    base: str | None
    interfaces: tuple[str, ...]
    fields: tuple[tuple[str, str], ...]  # (name, visibility), own declarations
    methods: dict[str, MethodMirror]  # full dispatch table

    def chain(self, catalog: dict[str, "ClassMirror"]) -> list[str]:
        """Root-first inheritance chain of class names, then interfaces."""
        names: list[str] = []
        cur: str | None = self.name
        while cur is not None:
            names.insert(0, cur)
            cur = catalog[cur].base if cur in catalog else None
        seen = set(names)
        for cname in names[:]:
            cm = catalog.get(cname)
            if cm is None:
                continue
            for iface in cm.interfaces:
                if iface not in seen:
                    seen.add(iface)
                    names.append(iface)
        return names


def fetch_catalog(session: Session) -> dict[str, ClassMirror]:
    reply = session.request({"type": "ListClasses"})
    catalog: dict[str, ClassMirror] = {}
    for name in reply["classes"]:
        info = session.request({"type": "ClassInfo", "class": name})
        methods = {}
        for m in info["methods"]:
            methods[m["name"]] = MethodMirror(
                name=m["name"], params=tuple(m["params"]), pure=m["pure"],
                visibility=m["visibility"], declaring=m["declaring"])
        catalog[name] = ClassMirror(
            name=info["name"], base=info["base"],
            interfaces=tuple(info["interfaces"]),
            fields=tuple((f["name"], f["visibility"]) for f in info["fields"]),
            methods=methods)
    return catalog


def mirror_get_field(session: Session, oid: int, field: str) -> Value:
    reply = session.request({"type": "ReadField", "objId": oid, "field": field})
    return decode_value(reply["value"])


def mirror_invoke(session: Session, oid: int, method: str,
                  args: list[Value]) -> Value:
    reply = session.request({
        "type": "InvokeMethod", "objId": oid, "method": method,
        "args": [encode_value(a) for a in args]})
    return decode_value(reply["value"])


def mirror_seq_snapshot(session: Session, seq_id: int) -> tuple[Value, ...]:
    reply = session.request({"type": "ReadSeq", "seqId": seq_id})
    return tuple(decode_value(e) for e in reply["elements"])


def mirror_heap_digest(session: Session) -> str:
    reply = session.request({"type": "HeapDigest"})
    return reply["hex64"]
