"""Message framing: fixed header, payload, trailing CRC-32 of the payload."""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass

from ..errors import FormatError

MAGIC = b"FHNM"
VERSION = 1

MSG_UPDATE = 1
MSG_MODEL = 2
MSG_ABORT = 3

_HEADER = struct.Struct("<4sHBIIQ")
ENVELOPE_OVERHEAD = _HEADER.size + 4  # header + crc32


@dataclass(frozen=True)
class Envelope:
    msg_type: int
    round_id: int
    sender_id: int
    payload: bytes


def encode_envelope(msg_type: int, round_id: int, sender_id: int, payload: bytes) -> bytes:
    header = _HEADER.pack(MAGIC, VERSION, msg_type, round_id, sender_id, len(payload))
    return header + payload + struct.pack("<I", zlib.crc32(payload))


def decode_envelope(data: bytes) -> Envelope:
    if len(data) < ENVELOPE_OVERHEAD:
        raise FormatError(f"envelope truncated at {len(data)} bytes")
    magic, version, msg_type, round_id, sender_id, payload_len = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FormatError(f"bad envelope magic {magic!r}")
    if version != VERSION:
        raise FormatError(f"unsupported envelope version {version}")
    if len(data) != _HEADER.size + payload_len + 4:
        raise FormatError("envelope length does not match payload_len")
    payload = data[_HEADER.size : _HEADER.size + payload_len]
    (crc,) = struct.unpack_from("<I", data, _HEADER.size + payload_len)
    if crc != zlib.crc32(payload):
        raise FormatError("envelope crc mismatch")
    if msg_type not in (MSG_UPDATE, MSG_MODEL, MSG_ABORT):
        raise FormatError(f"unknown message type {msg_type}")
    return Envelope(msg_type, round_id, sender_id, payload)
