"""In-VM debug agent: the target half of the wire protocol.

The interpreter is single threaded, so the agent works at safepoints. At
every method entry/exit boundary it polls the socket; while the VM is
suspended it sits in a blocking service loop until Resume. Debugger
initiated invocations run with events suppressed (the interpreter's
suppression counter), so they can never recurse into event delivery.

State machine: suspended -> services every request until Resume;
running -> only Suspend (Ok, takes effect at the next safepoint) and
Disconnect are accepted, Resume answers NOT_SUSPENDED like every other
state-inspecting command. Malformed frames and frames missing required
fields close the connection; the program then continues undebugged.
"""

from __future__ import annotations

import select
import socket
import sys
import time

from ..wire import framing, protocol
from ..wire.protocol import ValueCodecError, decode_value, encode_value
from . import interp as I


class AgentSetupError(Exception):
    """Could not establish the debug connection; the run cannot start."""


class _Policy:
    __slots__ = ("classes", "entry", "exit")

    def __init__(self, classes, entry, exit_):
        self.classes = classes
        self.entry = entry
        self.exit = exit_


class DebugAgent(I.EventSink):
    def __init__(self, mode: str, address, suspend_on_start: bool, log=None):
        # mode "listen": address is a port; mode "connect": (host, port)
        self.mode = mode
        self.address = address
        self.suspend_on_start = suspend_on_start
        self.log = log if log is not None else sys.stderr
        self.interp: I.Interpreter | None = None
        self.sock: socket.socket | None = None
        self.lsock: socket.socket | None = None
        self.policy: _Policy | None = None
        self.entry_count = 0

    def bind(self, interpreter: I.Interpreter):
        self.interp = interpreter

    # --- connection setup, before main runs ---

    def start(self):
        if self.mode == "listen":
            self.lsock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
            self.lsock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
            try:
                self.lsock.bind(("127.0.0.1", self.address))
            except OSError as e:
                raise AgentSetupError(f"cannot bind debug port: {e}") from None
            self.lsock.listen(1)
            if self.suspend_on_start:
                # hold before main until a debugger attaches, however long
                while self.sock is None:
                    conn, _ = self.lsock.accept()
                    self._accept_handshake(conn)
        else:
            host, port = self.address
            self.sock = self._dial(host, port)
            framing.send_magic(self.sock)
            try:
                framing.expect_magic(self.sock)
            except framing.HandshakeError as e:
                self.sock.close()
                self.sock = None
                raise AgentSetupError(str(e)) from None

    def _dial(self, host: str, port: int) -> socket.socket:
        deadline = time.monotonic() + 5.0
        while True:
            try:
                return socket.create_connection((host, port), timeout=5.0)
            except OSError as e:
                if time.monotonic() >= deadline:
                    raise AgentSetupError(
                        f"cannot reach debugger at {host}:{port}: {e}") from None
                time.sleep(0.05)

    def _accept_handshake(self, conn: socket.socket):
        """Acceptor role: the connecting side sends the magic, we echo it."""
        conn.settimeout(2.0)
        try:
            framing.expect_magic(conn)
            framing.send_magic(conn)
        except (framing.HandshakeError, OSError) as e:
            self.log.write(f"minivm: handshake failed: {e}\n")
            conn.close()
            return
        conn.settimeout(None)
        self.sock = conn

    # --- EventSink ---

    def vm_start(self):
        self._poll_attach()
        if self.sock is None:
            return
        self._send_events(self.suspend_on_start, [{"type": "VmStart"}])
        if self.suspend_on_start:
            self._service_until_resume()

    def method_entry(self, act: I.Activation):
        self._safepoint()
        if self._watching(act.class_name) and self.policy.entry:
            self.entry_count += 1
            self._send_events(True, [self._event("MethodEntry", act)])
            self._service_until_resume()

    def method_exit(self, act: I.Activation, return_value):
        self._safepoint()
        if self._watching(act.class_name) and self.policy.exit:
            msg = self._event("MethodExit", act)
            msg["returnValue"] = encode_value(return_value)
            self._send_events(True, [msg])
            self._service_until_resume()

    def vm_death(self, exit_status: int):
        if self.sock is not None:
            self._send_events(False, [{
                "type": "VmDeath",
                "exitStatus": exit_status,
                "entryCount": self.entry_count,
            }])
            self._drop()
        if self.lsock is not None:
            self.lsock.close()
            self.lsock = None

    # --- plumbing ---

    def _watching(self, class_name: str) -> bool:
        return (self.sock is not None and self.policy is not None
                and class_name in self.policy.classes)

    def _event(self, type_: str, act: I.Activation) -> dict:
        return {
            "type": type_,
            "frameId": act.frame_id,
            "class": act.class_name,
            "method": act.method,
            "thisId": act.this.oid,
            "args": [encode_value(a) for a in act.args],
            "callerClass": act.caller_class,
            "callerMethod": act.caller_method,
            "callerLine": act.caller_line,
        }

    def _send_events(self, suspend: bool, events: list[dict]):
        self._send({"type": "EventSet", "suspend": suspend, "events": events})

    def _send(self, msg: dict | None):
        if msg is None or self.sock is None:
            return
        try:
            framing.write_frame(self.sock, msg)
        except OSError:
            self._drop()

    def _drop(self):
        if self.sock is not None:
            try:
                self.sock.close()
            except OSError:
                pass
        self.sock = None
        self.policy = None

    def _readable(self, s) -> bool:
        r, _, _ = select.select([s], [], [], 0)
        return bool(r)

    def _poll_attach(self):
        if self.lsock is not None and self.sock is None and self._readable(self.lsock):
            conn, _ = self.lsock.accept()
            self._accept_handshake(conn)
            if self.sock is not None:
                # late attach still observes the full event lifecycle
                self._send_events(False, [{"type": "VmStart"}])

    def _safepoint(self):
        """Runs between events: accepts late attaches and the restricted
        running-state request set."""
        self._poll_attach()
        while self.sock is not None and self._readable(self.sock):
            try:
                msg = framing.read_frame(self.sock)
            except (framing.EndOfStream, framing.FramingError):
                self._drop()
                return
            if isinstance(msg, framing.Malformed):
                self._send(self._unknown_type_error(msg))
                continue
            if not self._well_formed_command(msg):
                self._drop()
                return
            t, mid = msg["type"], msg["id"]
            if t == "Suspend":
                self._send({"type": "Ok", "id": mid})
                self._service_until_resume()
            elif t == "Disconnect":
                self._send({"type": "Ok", "id": mid})
                self._drop()
            else:
                self._send({"type": "Error", "id": mid,
                            "code": "NOT_SUSPENDED",
                            "msg": f"{t} requires a suspended VM"})

    def _service_until_resume(self):
        while self.sock is not None:
            try:
                msg = framing.read_frame(self.sock)
            except (framing.EndOfStream, framing.FramingError):
                self._drop()
                return
            if isinstance(msg, framing.Malformed):
                self._send(self._unknown_type_error(msg))
                continue
            if not self._well_formed_command(msg):
                self._drop()
                return
            t, mid = msg["type"], msg["id"]
            if t == "Resume":
                self._send({"type": "Ok", "id": mid})
                return
            if t == "Disconnect":
                self._send({"type": "Ok", "id": mid})
                self._drop()
                return
            if t == "Suspend":
                self._send({"type": "Ok", "id": mid})
                continue
            self._send(self._answer_query(t, mid, msg))

    def _unknown_type_error(self, m: framing.Malformed) -> dict:
        err = {"type": "Error", "code": "UNKNOWN_TYPE",
               "msg": f"unknown message type {m.type!r}"}
        if m.id is not None:
            err["id"] = m.id
        return err

    def _well_formed_command(self, msg: dict) -> bool:
        t = msg["type"]
        if t not in protocol.COMMANDS:
            return False
        if "id" not in msg:
            return False
        return not protocol.missing_fields(msg)

    # --- suspended-state request handling ---

    def _answer_query(self, t: str, mid, msg: dict) -> dict | None:
        heap = self.interp.heap
        prog = self.interp.program

        def err(code, text):
            return {"type": "Error", "id": mid, "code": code, "msg": text}

        if t == "ListClasses":
            names = list(prog.classes) + list(prog.interfaces)
            return {"type": "ClassList", "id": mid, "classes": names}

        if t == "ClassInfo":
            name = msg["class"]
            if name in prog.classes:
                return self._class_info(mid, name)
            if name in prog.interfaces:
                return self._interface_info(mid, name)
            return err("UNKNOWN_CLASS", f"no class {name!r}")

        if t == "ReadField":
            obj = heap.object(_as_id(msg["objId"]))
            if obj is None:
                return err("UNKNOWN_OBJECT", f"no object {msg['objId']!r}")
            if msg["field"] not in obj.fields:
                return err("UNKNOWN_FIELD",
                           f"no field {msg['field']!r} on {obj.class_name}")
            return {"type": "ValueReply", "id": mid,
                    "value": encode_value(obj.fields[msg["field"]])}

        if t == "ReadSeq":
            hs = heap.seq(_as_id(msg["seqId"]))
            if hs is None:
                return err("UNKNOWN_OBJECT", f"no sequence {msg['seqId']!r}")
            return {"type": "SeqReply", "id": mid,
                    "elements": [encode_value(v) for v in hs.elements]}

        if t == "InvokeMethod":
            return self._invoke(mid, msg, err)

        if t == "HeapDigest":
            return {"type": "DigestReply", "id": mid,
                    "hex64": self.interp.heap_digest()}

        if t == "SetEventPolicy":
            classes, entry, exit_ = msg["classes"], msg["entry"], msg["exit"]
            if (not isinstance(classes, list)
                    or not all(isinstance(c, str) for c in classes)
                    or not isinstance(entry, bool) or not isinstance(exit_, bool)):
                self._drop()  # ill-typed payload counts as malformed
                return None
            self.policy = _Policy(frozenset(classes), entry, exit_)
            return {"type": "Ok", "id": mid}

        raise AssertionError(t)

    def _class_info(self, mid, name: str) -> dict:
        prog = self.interp.program
        cd = prog.classes[name]
        # full dispatch table: walk root-most first, overrides replace in place
        table: dict[str, dict] = {}
        for cls in prog.chain(name):
            for m in prog.classes[cls].methods.values():
                table[m.name] = {
                    "name": m.name,
                    "params": list(m.params),
                    "pure": m.pure,
                    "visibility": m.visibility,
                    "declaring": cls,
                }
        return {
            "type": "ClassInfoReply",
            "id": mid,
            "name": name,
            "base": cd.base,
            "interfaces": list(cd.interfaces),
            "fields": [{"name": f.name, "visibility": f.visibility}
                       for f in cd.fields],
            "methods": list(table.values()),
        }

    def _interface_info(self, mid, name: str) -> dict:
        idef = self.interp.program.interfaces[name]
        return {
            "type": "ClassInfoReply",
            "id": mid,
            "name": name,
            "base": None,
            "interfaces": [],
            "fields": [],
            "methods": [{
                "name": s.name,
                "params": list(s.params),
                "pure": s.pure,
                "visibility": "public",
                "declaring": name,
            } for s in idef.sigs.values()],
        }

    def _invoke(self, mid, msg: dict, err) -> dict:
        heap = self.interp.heap
        prog = self.interp.program
        obj = heap.object(_as_id(msg["objId"]))
        if obj is None:
            return err("UNKNOWN_OBJECT", f"no object {msg['objId']!r}")
        res = prog.resolve_method(obj.class_name, str(msg["method"]))
        if res is None:
            return err("UNKNOWN_METHOD",
                       f"no method {msg['method']!r} on {obj.class_name}")
        mdef, _ = res
        if not mdef.pure:
            return err("PURITY", f"{msg['method']} is not pure")
        if not isinstance(msg["args"], list):
            self._drop()
            return None
        try:
            args = [decode_value(a) for a in msg["args"]]
        except ValueCodecError:
            self._drop()
            return None
        if len(args) != len(mdef.params):
            return err("ARITY",
                       f"expected {len(mdef.params)} args, got {len(args)}")
        ref = I.VRef(obj.oid, obj.class_name)
        try:
            out = self.interp.agent_invoke(ref, mdef, args)
        except I.MiniRuntimeError as e:
            return err("TARGET_EXCEPTION", str(e))
        return {"type": "ValueReply", "id": mid, "value": encode_value(out)}


def _as_id(x) -> int:
    return x if isinstance(x, int) and not isinstance(x, bool) else -1
