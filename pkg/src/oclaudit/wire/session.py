"""Auditor-side session: connectors, lockstep requests, and the event queue.

One socket carries both replies and events. request() is synchronous and
never overlaps another request; EventSet frames that arrive while waiting
for a reply are queued for next_event_set() in arrival order.
"""

from __future__ import annotations

import os
import shlex
import socket
import subprocess
import sys
import tempfile
import time
from dataclasses import dataclass, field

from . import framing, protocol


class SessionError(Exception):
    """Transport or protocol failure; the session is unusable afterwards."""


class VmErrorReply(Exception):
    """Typed Error reply from the VM."""

    def __init__(self, code: str, msg: str):
        super().__init__(f"{code}: {msg}")
        self.code = code
        self.msg = msg


@dataclass
class ConnectorConfig:
    mode: str  # "launch" | "attach" | "listen"
    program: str | None = None
    vm_cmd: tuple[str, ...] = ("minivm",)
    host: str = "127.0.0.1"
    port: int = 0
    suspend: bool = True  # launch mode always passes --suspend


@dataclass
class Session:
    sock: socket.socket
    vm_proc: subprocess.Popen | None = None
    vm_stdout_path: str | None = None
    vm_stderr_path: str | None = None
    _next_id: int = 0
    _events: list[dict] = field(default_factory=list)
    dead: bool = False

    def request(self, msg: dict) -> dict:
        """Sends one command and blocks for its reply; queues event sets."""
        if self.dead:
            raise SessionError("session is dead")
        self._next_id += 1
        rid = self._next_id
        out = dict(msg)
        out["id"] = rid
        try:
            framing.write_frame(self.sock, out)
        except OSError as e:
            self._die(f"send failed: {e}")
        while True:
            m = self._read()
            if isinstance(m, framing.Malformed):
                self._answer_unknown(m)
                continue
            t = m["type"]
            if t == "EventSet":
                self._take_event_set(m)
                continue
            if t in protocol.REPLIES:
                if m.get("id") != rid:
                    self._die(f"reply id {m.get('id')!r} does not match request {rid}")
                if protocol.missing_fields(m):
                    self._die(f"reply missing fields: {m}")
                if t == "Error":
                    code = m["code"]
                    if code not in protocol.ERROR_CODES:
                        self._die(f"peer sent unknown error code {code!r}")
                    raise VmErrorReply(code, m["msg"])
                return m
            self._die(f"unexpected frame {t!r} while awaiting a reply")

    def next_event_set(self) -> dict:
        """Blocks until an EventSet is available; delivery preserves VM order."""
        if self._events:
            return self._events.pop(0)
        if self.dead:
            raise SessionError("session is dead")
        while True:
            m = self._read()
            if isinstance(m, framing.Malformed):
                self._answer_unknown(m)
                continue
            if m["type"] == "EventSet":
                self._validate_event_set(m)
                return m
            self._die(f"unexpected frame {m['type']!r} while awaiting events")

    def resume_all(self, warn=None) -> None:
        try:
            self.request({"type": "Resume"})
        except VmErrorReply as e:
            if e.code != "NOT_SUSPENDED":
                raise
            (warn or (lambda s: sys.stderr.write(s + "\n")))(
                "resume ignored: VM was not suspended")

    def close(self) -> None:
        if not self.dead:
            try:
                self.sock.close()
            except OSError:
                pass
            self.dead = True
        self._reap()

    # --- internals ---

    def _read(self):
        try:
            return framing.read_frame(self.sock)
        except framing.EndOfStream:
            self._die("connection closed by VM")
        except framing.FramingError as e:
            self._die(f"framing error: {e}")

    def _take_event_set(self, m: dict) -> None:
        self._validate_event_set(m)
        self._events.append(m)

    def _validate_event_set(self, m: dict) -> None:
        if protocol.missing_fields(m) or not isinstance(m["events"], list) or not m["events"]:
            self._die("badly shaped EventSet")
        for ev in m["events"]:
            if (not isinstance(ev, dict)
                    or ev.get("type") not in protocol.EVENTS
                    or protocol.missing_fields(ev)):
                self._die(f"badly shaped event in EventSet: {ev!r}")

    def _answer_unknown(self, m: framing.Malformed) -> None:
        err = {"type": "Error", "code": "UNKNOWN_TYPE",
               "msg": f"unknown message type {m.type!r}"}
        if m.id is not None:
            err["id"] = m.id
        try:
            framing.write_frame(self.sock, err)
        except OSError:
            pass

    def _die(self, why: str):
        self.dead = True
        try:
            self.sock.close()
        except OSError:
            pass
        raise SessionError(why)

    def _reap(self) -> None:
        """Launch mode must never leave an orphan VM."""
        p = self.vm_proc
        if p is None or p.poll() is not None:
            return
        try:
            p.wait(timeout=5.0)
        except subprocess.TimeoutExpired:
            p.kill()
            p.wait(timeout=5.0)


def _free_port() -> int:
    s = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    s.bind(("127.0.0.1", 0))
    port = s.getsockname()[1]
    s.close()
    return port


def open_session(cfg: ConnectorConfig) -> Session:
    if cfg.mode == "launch":
        return _launch(cfg)
    if cfg.mode == "attach":
        return _attach(cfg)
    if cfg.mode == "listen":
        return _listen(cfg)
    raise ValueError(f"unknown connector mode {cfg.mode!r}")


def _handshake_as_connector(sock: socket.socket) -> None:
    framing.send_magic(sock)
    framing.expect_magic(sock)


def _launch(cfg: ConnectorConfig) -> Session:
    port = _free_port()
    out = tempfile.NamedTemporaryFile(
        prefix="minivm-out-", suffix=".txt", delete=False)
    err = tempfile.NamedTemporaryFile(
        prefix="minivm-err-", suffix=".txt", delete=False)
    argv = [*cfg.vm_cmd, "run", "--debug-listen", str(port),
            "--suspend", cfg.program]
    try:
        proc = subprocess.Popen(argv, stdout=out, stderr=err,
                                stdin=subprocess.DEVNULL)
    except OSError as e:
        out.close()
        err.close()
        raise SessionError(f"cannot spawn VM {argv[0]!r}: {e}") from None
    out.close()
    err.close()

    deadline = time.monotonic() + 5.0
    sock = None
    while sock is None:
        if proc.poll() is not None:
            raise SessionError(
                f"VM exited with status {proc.returncode} before accepting"
                f" a connection ({_tail(err.name)})")
        try:
            sock = socket.create_connection(("127.0.0.1", port), timeout=1.0)
        except OSError:
            if time.monotonic() >= deadline:
                proc.kill()
                raise SessionError("timed out connecting to the launched VM")
            time.sleep(0.05)
    try:
        _handshake_as_connector(sock)
    except framing.HandshakeError as e:
        sock.close()
        proc.kill()
        raise SessionError(str(e)) from None
    return Session(sock, vm_proc=proc,
                   vm_stdout_path=out.name, vm_stderr_path=err.name)


def _tail(path: str, limit: int = 300) -> str:
    try:
        with open(path, encoding="utf-8", errors="replace") as f:
            text = f.read()
    except OSError:
        return "no diagnostics captured"
    text = text.strip()
    return text[-limit:] if text else "no diagnostics captured"


def _attach(cfg: ConnectorConfig) -> Session:
    try:
        sock = socket.create_connection((cfg.host, cfg.port), timeout=5.0)
    except OSError as e:
        raise SessionError(f"cannot attach to {cfg.host}:{cfg.port}: {e}") from None
    try:
        _handshake_as_connector(sock)
    except framing.HandshakeError as e:
        sock.close()
        raise SessionError(str(e)) from None
    sock.settimeout(None)
    return Session(sock)


def _listen(cfg: ConnectorConfig) -> Session:
    lsock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    lsock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    try:
        lsock.bind(("127.0.0.1", cfg.port))
    except OSError as e:
        lsock.close()
        raise SessionError(f"cannot bind port {cfg.port}: {e}") from None
    lsock.listen(1)
    try:
        conn, _ = lsock.accept()
    finally:
        lsock.close()
    try:
        # the VM dialed us, so it speaks first and we echo
        framing.expect_magic(conn)
        framing.send_magic(conn)
    except framing.HandshakeError as e:
        conn.close()
        raise SessionError(str(e)) from None
    conn.settimeout(None)
    return Session(conn)


def default_vm_cmd() -> tuple[str, ...]:
    """--vm flag > AUDITOR_VM environment variable > `minivm` on PATH."""
    env = os.environ.get("AUDITOR_VM")
    if env:
        return tuple(shlex.split(env))
    return ("minivm",)
