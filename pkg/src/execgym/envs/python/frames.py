"""Length-prefixed JSON frames for driving the interpreter mediator.

Wire layout: 4-byte big-endian payload length, then UTF-8 JSON. Requests
are ``{op: exec|eval|reset, code: str, timeout: float}``; responses are
``{ok: bool, output: str, error: str|null, error_class: str}``.
"""

from __future__ import annotations

import json
import struct
from typing import Any, BinaryIO

MAX_FRAME_BYTES = 8 << 20

_HEADER = struct.Struct(">I")


class FrameError(Exception):
    """Malformed or oversized frame, or a closed stream mid-frame."""


def write_frame(stream: BinaryIO, message: dict[str, Any]) -> None:
    payload = json.dumps(message).encode("utf-8")
    if len(payload) > MAX_FRAME_BYTES:
        raise FrameError(f"frame of {len(payload)} bytes exceeds the cap")
    stream.write(_HEADER.pack(len(payload)) + payload)
    stream.flush()


def read_frame(stream: BinaryIO) -> dict[str, Any]:
    header = _read_exact(stream, _HEADER.size)
    (length,) = _HEADER.unpack(header)
    if length > MAX_FRAME_BYTES:
        raise FrameError(f"frame of {length} bytes exceeds the cap")
    payload = _read_exact(stream, length)
    try:
        message = json.loads(payload.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FrameError(f"undecodable frame: {exc}") from exc
    if not isinstance(message, dict):
        raise FrameError("frame payload must be a JSON object")
    return message


def _read_exact(stream: BinaryIO, n: int) -> bytes:
    chunks = b""
    while len(chunks) < n:
        chunk = stream.read(n - len(chunks))
        if not chunk:
            raise FrameError("stream closed mid-frame")
        chunks += chunk
    return chunks
