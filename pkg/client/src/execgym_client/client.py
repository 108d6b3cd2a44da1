"""Remote environment client.

Presents the reset/step/close contract over the session service's wire
protocol (newline-delimited JSON over TCP, version 1.0). Synchronous and
blocking by design: research loops are sequential within an episode. One
client object owns one server session; clients to different sessions can
be used from different threads.
"""

from __future__ import annotations

import json
import socket
from dataclasses import dataclass, field
from typing import Any

from .errors import (
    ClosedSessionError,
    ConnectionFailure,
    ProtocolViolation,
    error_for,
)

PROTOCOL_VERSION = "1.0"

SUBMIT = "submit"


@dataclass
class Observation:
    text: str
    truncated: bool = False
    exit_status: int | None = None
    error_class: str = "none"

    @classmethod
    def from_wire(cls, doc: dict[str, Any]) -> "Observation":
        return cls(
            text=doc.get("text", ""),
            truncated=bool(doc.get("truncated", False)),
            exit_status=doc.get("exit_status"),
            error_class=doc.get("error_class", "none"),
        )


@dataclass
class StepResult:
    observation: Observation
    reward: float | None
    done: bool
    info: dict[str, Any] = field(default_factory=dict)

    def __iter__(self):
        return iter((self.observation, self.reward, self.done, self.info))


class RemoteEnv:
    """One environment session on a remote service.

    >>> env = RemoteEnv("127.0.0.1", 7710, env="sql")
    >>> obs = env.reset(0)
    >>> obs, reward, done, info = env.step("SELECT 1")
    >>> env.close()
    """

    def __init__(
        self,
        host: str = "127.0.0.1",
        port: int = 7710,
        env: str = "sql",
        params: dict[str, Any] | None = None,
        timeout: float = 120.0,
    ):
        self.address = (host, port)
        self.env_name = env
        self.session_id: str | None = None
        self.last_observation: Observation | None = None
        self.done = False
        self._closed = False
        try:
            self._sock = socket.create_connection(self.address, timeout=timeout)
        except OSError as exc:
            raise ConnectionFailure(f"could not connect to {host}:{port}: {exc}") from exc
        self._stream = self._sock.makefile("rwb")
        create_params = {"env": env}
        create_params.update(params or {})
        result = self._call("create", create_params, session=False)
        self.session_id = result["session_id"]

    # -- episode surface -----------------------------------------------

    def reset(self, index: int | None = None) -> Observation:
        """Start an episode; the observation carries the task query."""
        params: dict[str, Any] = {}
        if index is not None:
            params["index"] = index
        result = self._call("reset", params)
        self.done = False
        self.last_observation = Observation.from_wire(result["observation"])
        self.task_id = result.get("task_id")
        return self.last_observation

    def step(self, action: str) -> StepResult:
        """Execute one action; ``submit [payload]`` ends the episode."""
        result = self._call("step", {"action": action})
        outcome = StepResult(
            observation=Observation.from_wire(result["observation"]),
            reward=result.get("reward"),
            done=bool(result.get("done")),
            info=result.get("info") or {},
        )
        self.last_observation = outcome.observation
        self.done = outcome.done
        return outcome

    def submit(self, payload: str = "") -> StepResult:
        return self.step(f"{SUBMIT} {payload}".strip())

    def info(self) -> dict[str, Any]:
        return self._call("info", {})

    def close(self) -> None:
        """Close the server session and the connection. Idempotent."""
        if self._closed:
            return
        try:
            self._call("close", {})
        except Exception:
            pass
        self._closed = True
        try:
            self._stream.close()
            self._sock.close()
        except OSError:
            pass

    def __enter__(self) -> "RemoteEnv":
        return self

    def __exit__(self, *exc_info: Any) -> None:
        self.close()

    # -- wire ------------------------------------------------------------

    def _call(self, op: str, params: dict[str, Any], session: bool = True) -> dict[str, Any]:
        if self._closed:
            raise ClosedSessionError("this client was closed; create a new RemoteEnv")
        message: dict[str, Any] = {"v": PROTOCOL_VERSION, "op": op, "params": params}
        if session:
            message["session_id"] = self.session_id
        try:
            self._stream.write((json.dumps(message) + "\n").encode("utf-8"))
            self._stream.flush()
            line = self._stream.readline()
        except OSError as exc:
            raise ConnectionFailure(f"connection to {self.address} broke: {exc}") from exc
        if not line:
            raise ConnectionFailure("server closed the connection")
        try:
            response = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ProtocolViolation(f"undecodable response: {line[:120]!r}") from exc
        if not isinstance(response, dict) or "ok" not in response:
            raise ProtocolViolation(f"malformed response object: {response!r}")
        if not response["ok"]:
            error = response.get("error") or {}
            raise error_for(error.get("type", "error"), error.get("message", ""))
        result = response.get("result")
        if not isinstance(result, dict):
            raise ProtocolViolation("ok response without a result object")
        return result
