"""Debug wire protocol: framing, message catalog, session, and mirrors."""

from .framing import (
    MAGIC,
    EndOfStream,
    FramingError,
    HandshakeError,
    Malformed,
    decode_frame,
    encode_frame,
    expect_magic,
    read_exact,
    read_frame,
    send_magic,
    write_frame,
)
from .protocol import (
    COMMANDS,
    ERROR_CODES,
    EVENTS,
    KNOWN_TYPES,
    REPLIES,
    decode_value,
    encode_value,
    missing_fields,
)

__all__ = [
    "COMMANDS",
    "ERROR_CODES",
    "EVENTS",
    "EndOfStream",
    "FramingError",
    "HandshakeError",
    "KNOWN_TYPES",
    "MAGIC",
    "Malformed",
    "REPLIES",
    "decode_frame",
    "decode_value",
    "encode_frame",
    "encode_value",
    "expect_magic",
    "missing_fields",
    "read_exact",
    "read_frame",
    "send_magic",
    "write_frame",
]
