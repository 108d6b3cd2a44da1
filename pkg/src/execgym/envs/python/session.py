"""Host-side driving of the interpreter mediator.

A session owns one mediator process and exchanges frames with it under a
deadline. The mediator enforces per-request timeouts itself (the session
keeps its namespace on timeout); the session-level deadline is the
backstop for a wedged mediator, and tripping it restarts the process —
prior definitions are lost and the caller is told.
"""

from __future__ import annotations

import os
import select
import shutil
import subprocess
import sys
import tempfile
import time
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Any

from ...errors import InfrastructureError
from . import frames

MEDIATOR_PATH = Path(__file__).with_name("mediator.py")

# extra slack on top of the in-mediator timer before declaring it wedged
DEADLINE_GRACE = 5.0


class SessionCrash(Exception):
    """The mediator died or stopped answering; the session was restarted."""


class InterpreterSession(ABC):
    @abstractmethod
    def request(self, op: str, code: str = "", timeout: float = 60.0) -> dict[str, Any]:
        """One frame round trip. Raises SessionCrash after a restart."""

    @abstractmethod
    def close(self) -> None: ...


class PipeInterpreterSession(InterpreterSession):
    """Mediator as a child process on this machine (local backend).

    Without an explicit working directory the session owns a scratch
    directory, so agent code writing files never lands in the caller's
    tree; the scratch is removed on close.
    """

    def __init__(self, workdir: str | Path | None = None, python: str | None = None):
        self._owned_dir = None
        if workdir is None:
            self._owned_dir = tempfile.mkdtemp(prefix="execgym-interp-")
            workdir = self._owned_dir
        self.workdir = str(workdir)
        self.python = python or sys.executable
        self._proc: subprocess.Popen | None = None
        self._spawn()

    def _spawn(self) -> None:
        self._proc = subprocess.Popen(
            [self.python, str(MEDIATOR_PATH)],
            cwd=self.workdir,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            stderr=subprocess.DEVNULL,
            start_new_session=True,
        )

    def request(self, op: str, code: str = "", timeout: float = 60.0) -> dict[str, Any]:
        proc = self._proc
        if proc is None or proc.poll() is not None:
            self._restart()
            raise SessionCrash("interpreter session was dead; restarted")
        try:
            frames.write_frame(proc.stdin, {"op": op, "code": code, "timeout": timeout})
            reader = _DeadlineStream(proc.stdout.fileno(), time.monotonic() + timeout + DEADLINE_GRACE)
            return frames.read_frame(reader)
        except (frames.FrameError, TimeoutError, BrokenPipeError, OSError) as exc:
            self._restart()
            raise SessionCrash(f"interpreter session failed ({exc}); restarted") from exc

    def _restart(self) -> None:
        self._kill()
        self._spawn()

    def _kill(self) -> None:
        if self._proc is not None and self._proc.poll() is None:
            self._proc.kill()
            try:
                self._proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                pass
        self._proc = None

    def close(self) -> None:
        self._kill()
        if self._owned_dir is not None:
            shutil.rmtree(self._owned_dir, ignore_errors=True)
            self._owned_dir = None


class _DeadlineStream:
    """read(n) over a pipe fd that trips a TimeoutError at the deadline."""

    def __init__(self, fd: int, deadline: float):
        self.fd = fd
        self.deadline = deadline

    def read(self, n: int) -> bytes:
        remaining = self.deadline - time.monotonic()
        if remaining <= 0:
            raise TimeoutError("deadline exceeded waiting for the mediator")
        ready, _, _ = select.select([self.fd], [], [], remaining)
        if not ready:
            raise TimeoutError("deadline exceeded waiting for the mediator")
        return os.read(self.fd, n)


def local_session_factory(workdir: str | Path | None = None):
    """Factory handed to the environment on engine-less machines."""

    def factory() -> InterpreterSession:
        try:
            return PipeInterpreterSession(workdir=workdir)
        except OSError as exc:
            raise InfrastructureError(f"could not start the interpreter mediator: {exc}") from exc

    return factory
