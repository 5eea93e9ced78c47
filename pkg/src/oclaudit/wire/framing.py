"""Frame transport: 4-byte big-endian body length, UTF-8 JSON body.

The handshake precedes all frames: the side that opened the TCP connection
sends the 8 ASCII bytes "MDWP-001" and the accepting side echoes them.

Encoded bodies put "type" first so test fixtures can assert exact bytes;
decoding accepts any key order. A syntactically valid frame whose type is
not in the catalog decodes to a Malformed marker: the receiver answers it
with Error UNKNOWN_TYPE and keeps the connection. Broken UTF-8, broken
JSON, a non-object body, a missing/non-string "type", a zero-length body,
or a truncated frame are fatal: FramingError, connection closed.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass

from .protocol import KNOWN_TYPES

MAGIC = b"MDWP-001"

_MAX_BODY = 2**32 - 1


class FramingError(Exception):
    """Unrecoverable transport corruption; the connection must close."""


class EndOfStream(Exception):
    """Peer closed the connection at a frame boundary."""


class HandshakeError(Exception):
    pass


@dataclass(frozen=True)
class Malformed:
    """A well-framed message of unknown type."""

    type: object
    id: object | None


def encode_frame(msg: dict) -> bytes:
    if "type" not in msg:
        raise FramingError("message has no type")
    ordered = {"type": msg["type"]}
    for k, v in msg.items():
        if k != "type":
            ordered[k] = v
    body = json.dumps(ordered, separators=(",", ":"), ensure_ascii=False)
    raw = body.encode("utf-8")
    if len(raw) > _MAX_BODY:
        raise FramingError("frame body exceeds the 32-bit length header")
    return struct.pack(">I", len(raw)) + raw


def decode_frame(body: bytes) -> dict | Malformed:
    try:
        obj = json.loads(body.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise FramingError(f"undecodable frame body: {e}") from None
    if not isinstance(obj, dict):
        raise FramingError("frame body is not a JSON object")
    t = obj.get("type")
    if not isinstance(t, str):
        raise FramingError("frame has no type field")
    if t not in KNOWN_TYPES:
        return Malformed(t, obj.get("id"))
    return obj


def read_exact(sock, n: int) -> bytes:
    """Reads exactly n bytes. EOF before the first byte raises EndOfStream;
    EOF partway through raises FramingError."""
    chunks = []
    got = 0
    while got < n:
        chunk = sock.recv(n - got)
        if not chunk:
            if got == 0:
                raise EndOfStream()
            raise FramingError(f"truncated frame: expected {n} bytes, got {got}")
        chunks.append(chunk)
        got += len(chunk)
    return b"".join(chunks)


def read_frame(sock) -> dict | Malformed:
    header = read_exact(sock, 4)
    (length,) = struct.unpack(">I", header)
    if length == 0:
        raise FramingError("zero-length frame")
    return decode_frame(read_exact(sock, length))


def write_frame(sock, msg: dict) -> None:
    sock.sendall(encode_frame(msg))


def send_magic(sock) -> None:
    sock.sendall(MAGIC)


def expect_magic(sock) -> None:
    try:
        got = read_exact(sock, len(MAGIC))
    except (EndOfStream, FramingError):
        raise HandshakeError("connection closed during handshake") from None
    if got != MAGIC:
        raise HandshakeError(f"protocol version mismatch: got {got!r}")
