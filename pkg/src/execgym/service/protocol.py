"""Wire protocol: newline-delimited JSON messages, version-checked.

One request per line (or per HTTP POST body). Requests:

    {"v": "1.0", "op": "create|reset|step|close|info",
     "session_id": "...",        # absent for create
     "params": {...}}            # op-specific

Responses mirror the shape:

    {"v": "1.0", "ok": true,  "result": {...}}
    {"v": "1.0", "ok": false, "error": {"type": "...", "message": "..."}}

Unknown fields are ignored (forward compatibility); unknown major
versions are rejected. The full schema lives in docs/wire-protocol.md.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

from ..errors import ProtocolError

PROTOCOL_VERSION = "1.0"
OPS = ("create", "reset", "step", "close", "info")


@dataclass
class SessionMessage:
    op: str
    session_id: str | None = None
    params: dict[str, Any] = field(default_factory=dict)
    v: str = PROTOCOL_VERSION


def encode_message(message: SessionMessage) -> str:
    doc: dict[str, Any] = {"v": message.v, "op": message.op, "params": message.params}
    if message.session_id is not None:
        doc["session_id"] = message.session_id
    return json.dumps(doc)


def decode_message(line: str | bytes) -> SessionMessage:
    if isinstance(line, bytes):
        try:
            line = line.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ProtocolError(f"frame is not UTF-8: {exc}") from exc
    try:
        doc = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ProtocolError(f"malformed frame: {exc}") from exc
    if not isinstance(doc, dict):
        raise ProtocolError("frame must be a JSON object")
    version = doc.get("v")
    if version is None:
        raise ProtocolError("missing protocol version field 'v'")
    if str(version).split(".")[0] != PROTOCOL_VERSION.split(".")[0]:
        raise ProtocolError(f"unsupported protocol major version {version!r}")
    op = doc.get("op")
    if not isinstance(op, str) or op not in OPS:
        raise ProtocolError(f"unknown op {op!r}")
    session_id = doc.get("session_id")
    if session_id is not None and not isinstance(session_id, str):
        raise ProtocolError("session_id must be a string")
    params = doc.get("params", {})
    if not isinstance(params, dict):
        raise ProtocolError("params must be an object")
    return SessionMessage(op=op, session_id=session_id, params=params, v=str(version))


def ok_response(result: dict[str, Any]) -> dict[str, Any]:
    return {"v": PROTOCOL_VERSION, "ok": True, "result": result}


def error_response(error_type: str, message: str) -> dict[str, Any]:
    return {"v": PROTOCOL_VERSION, "ok": False, "error": {"type": error_type, "message": message}}
