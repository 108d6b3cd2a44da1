"""Session service: environments over the wire for out-of-process agents.

Every create provisions an isolated environment session (its own
sandboxes); per-session handling is strictly sequential, sessions run
concurrently. Idle sessions are reaped with their sandboxes after a
configurable timeout. The same message handler serves both listeners:
newline-delimited JSON over TCP and an HTTP POST endpoint carrying one
message per request.
"""

from __future__ import annotations

import json
import logging
import socketserver
import threading
import time
import uuid
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Any, Callable

from ..core.env import Environment
from ..errors import (
    BoundsError,
    EpisodeAbort,
    ExecGymError,
    InfrastructureError,
    LifecycleError,
    ProtocolError,
    SessionNotFoundError,
)
from .protocol import SessionMessage, decode_message, error_response, ok_response

logger = logging.getLogger(__name__)

EnvBuilder = Callable[[str, dict[str, Any]], Environment]

DEFAULT_IDLE_TIMEOUT = 600.0
DEFAULT_MAX_SESSIONS = 16


@dataclass
class _Session:
    session_id: str
    env_name: str
    env: Environment
    lock: threading.Lock = field(default_factory=threading.Lock)
    last_used: float = field(default_factory=time.monotonic)

    def touch(self) -> None:
        self.last_used = time.monotonic()


class SessionManager:
    """Owns live sessions; thread-safe; reaps idle ones."""

    def __init__(
        self,
        env_builder: EnvBuilder,
        max_sessions: int = DEFAULT_MAX_SESSIONS,
        idle_timeout: float = DEFAULT_IDLE_TIMEOUT,
    ):
        self.env_builder = env_builder
        self.max_sessions = max_sessions
        self.idle_timeout = idle_timeout
        self._sessions: dict[str, _Session] = {}
        self._lock = threading.Lock()

    def create(self, env_name: str, params: dict[str, Any]) -> _Session:
        with self._lock:
            if len(self._sessions) >= self.max_sessions:
                raise InfrastructureError(
                    f"session limit reached ({self.max_sessions}); close or wait for reaping"
                )
        env = self.env_builder(env_name, params)
        session = _Session(session_id=uuid.uuid4().hex, env_name=env_name, env=env)
        with self._lock:
            self._sessions[session.session_id] = session
        logger.info("session %s created (%s)", session.session_id[:8], env_name)
        return session

    def get(self, session_id: str | None) -> _Session:
        if not session_id:
            raise SessionNotFoundError("message carries no session_id")
        with self._lock:
            session = self._sessions.get(session_id)
        if session is None:
            raise SessionNotFoundError(f"unknown session {session_id!r}")
        return session

    def close(self, session_id: str) -> None:
        with self._lock:
            session = self._sessions.pop(session_id, None)
        if session is not None:
            session.env.close()
            logger.info("session %s closed", session_id[:8])

    def reap_idle(self) -> int:
        cutoff = time.monotonic() - self.idle_timeout
        with self._lock:
            stale = [sid for sid, s in self._sessions.items() if s.last_used < cutoff]
        for sid in stale:
            logger.info("reaping idle session %s", sid[:8])
            self.close(sid)
        return len(stale)

    def close_all(self) -> None:
        with self._lock:
            sids = list(self._sessions)
        for sid in sids:
            self.close(sid)

    @property
    def count(self) -> int:
        with self._lock:
            return len(self._sessions)


class MessageHandler:
    """Dispatches decoded messages against the session manager."""

    def __init__(self, sessions: SessionManager):
        self.sessions = sessions

    def handle_line(self, line: str | bytes) -> dict[str, Any]:
        try:
            message = decode_message(line)
        except ProtocolError as exc:
            return error_response("protocol_error", str(exc))
        return self.handle(message)

    def handle(self, message: SessionMessage) -> dict[str, Any]:
        try:
            if message.op == "create":
                return self._create(message)
            session = self.sessions.get(message.session_id)
            with session.lock:
                session.touch()
                if message.op == "reset":
                    return self._reset(session, message.params)
                if message.op == "step":
                    return self._step(session, message.params)
                if message.op == "close":
                    self.sessions.close(session.session_id)
                    return ok_response({"closed": True})
                return ok_response(
                    {
                        "session_id": session.session_id,
                        "env": session.env_name,
                        "done": session.env.done,
                        "task_id": session.env.task.id if session.env.task else None,
                    }
                )
        except SessionNotFoundError as exc:
            return error_response("session_not_found", str(exc))
        except BoundsError as exc:
            return error_response("bounds_error", str(exc))
        except LifecycleError as exc:
            return error_response("lifecycle_error", str(exc))
        except EpisodeAbort as exc:
            return error_response("episode_abort", str(exc))
        except InfrastructureError as exc:
            return error_response("infrastructure_error", str(exc))
        except ExecGymError as exc:
            return error_response("error", str(exc))
        except Exception as exc:  # crash containment: this session's reply only
            logger.exception("unexpected failure handling %s", message.op)
            return error_response("internal_error", f"{type(exc).__name__}: {exc}")

    def _create(self, message: SessionMessage) -> dict[str, Any]:
        params = dict(message.params)
        env_name = params.pop("env", None)
        if not env_name:
            return error_response("protocol_error", "create requires params.env")
        index = params.pop("index", None)
        session = self.sessions.create(str(env_name), params)
        result: dict[str, Any] = {"session_id": session.session_id, "env": session.env_name}
        if index is not None:
            with session.lock:
                obs, task = session.env.reset(int(index))
            result.update({"observation": obs.to_dict(), "task_id": task.id, "query": task.query})
        return ok_response(result)

    def _reset(self, session: _Session, params: dict[str, Any]) -> dict[str, Any]:
        index = params.get("index")
        obs, task = session.env.reset(int(index) if index is not None else None)
        return ok_response({"observation": obs.to_dict(), "task_id": task.id, "query": task.query})

    def _step(self, session: _Session, params: dict[str, Any]) -> dict[str, Any]:
        action = params.get("action")
        if not isinstance(action, str):
            return error_response("protocol_error", "step requires params.action as a string")
        outcome = session.env.step(action)
        return ok_response(
            {
                "observation": outcome.observation.to_dict(),
                "reward": outcome.reward,
                "done": outcome.done,
                "info": outcome.info,
            }
        )


class _TcpHandler(socketserver.StreamRequestHandler):
    def handle(self) -> None:
        handler: MessageHandler = self.server.message_handler  # type: ignore[attr-defined]
        while True:
            line = self.rfile.readline()
            if not line:
                break
            if not line.strip():
                continue
            response = handler.handle_line(line)
            self.wfile.write((json.dumps(response) + "\n").encode("utf-8"))


class _TcpServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True


class _HttpHandler(BaseHTTPRequestHandler):
    def do_POST(self) -> None:  # noqa: N802 (stdlib naming)
        handler: MessageHandler = self.server.message_handler  # type: ignore[attr-defined]
        length = int(self.headers.get("Content-Length", 0))
        body = self.rfile.read(length)
        response = json.dumps(handler.handle_line(body)).encode("utf-8")
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(response)))
        self.end_headers()
        self.wfile.write(response)

    def log_message(self, format: str, *args: Any) -> None:
        logger.debug("http: " + format, *args)


class SessionService:
    """Both listeners plus the reaper, wrapped for programmatic control."""

    def __init__(
        self,
        env_builder: EnvBuilder,
        host: str = "127.0.0.1",
        port: int = 7710,
        http_port: int | None = None,
        max_sessions: int = DEFAULT_MAX_SESSIONS,
        idle_timeout: float = DEFAULT_IDLE_TIMEOUT,
    ):
        self.sessions = SessionManager(env_builder, max_sessions, idle_timeout)
        self.handler = MessageHandler(self.sessions)
        self._tcp = _TcpServer((host, port), _TcpHandler)
        self._tcp.message_handler = self.handler  # type: ignore[attr-defined]
        self._http = None
        if http_port is not None:
            self._http = ThreadingHTTPServer((host, http_port), _HttpHandler)
            self._http.message_handler = self.handler  # type: ignore[attr-defined]
        self._threads: list[threading.Thread] = []
        self._stop = threading.Event()

    @property
    def address(self) -> tuple[str, int]:
        return self._tcp.server_address  # type: ignore[return-value]

    @property
    def http_address(self) -> tuple[str, int] | None:
        return self._http.server_address if self._http else None  # type: ignore[return-value]

    def start(self) -> None:
        self._threads = [threading.Thread(target=self._tcp.serve_forever, daemon=True)]
        if self._http is not None:
            self._threads.append(threading.Thread(target=self._http.serve_forever, daemon=True))
        self._threads.append(threading.Thread(target=self._reaper, daemon=True))
        for thread in self._threads:
            thread.start()
        logger.info("session service listening on %s:%s", *self.address)

    def _reaper(self) -> None:
        interval = max(5.0, min(60.0, self.sessions.idle_timeout / 4))
        while not self._stop.wait(interval):
            self.sessions.reap_idle()

    def serve_forever(self) -> None:
        self.start()
        try:
            while not self._stop.wait(1.0):
                pass
        except KeyboardInterrupt:
            pass
        finally:
            self.stop()

    def stop(self) -> None:
        self._stop.set()
        self._tcp.shutdown()
        self._tcp.server_close()
        if self._http is not None:
            self._http.shutdown()
            self._http.server_close()
        self.sessions.close_all()
