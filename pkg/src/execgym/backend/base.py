"""Backend contract: provision sandboxes, execute commands, fetch files.

Environments never talk to a container engine directly; they hold a
``ContainerHandle`` and use it for everything (stateful action execution,
stateless plumbing commands, file hashes, snapshot resets). Two backends
implement the contract: the Docker Engine client and a local subprocess
backend for engine-less machines (trusted workloads only).
"""

from __future__ import annotations

import threading
from abc import ABC, abstractmethod
from dataclasses import dataclass, field

from ..errors import ResetError

# Raw capture cap at the backend, applied before token-level truncation.
# Bounds memory for runaway commands.
OUTPUT_BYTE_CAP = 1 << 20

# Exit status recorded for timed-out executions (the engine reports no
# status for killed execs).
TIMEOUT_EXIT_STATUS = -1

DEFAULT_EXEC_TIMEOUT = 60.0


@dataclass
class ContainerSpec:
    """Everything needed to provision one sandbox.

    ``entry_mode`` selects between a command sandbox kept alive for shell
    actions ("shell") and an image that runs its own long-lived service
    ("service", e.g. a database). ``init_script`` commands run during
    provisioning and must each exit 0. ``files`` are staged into the
    sandbox before the init script runs.
    """

    image: str
    entry_mode: str = "shell"  # "shell" | "service"
    init_script: list[str] = field(default_factory=list)
    env_vars: dict[str, str] = field(default_factory=dict)
    workdir: str = "/"
    files: dict[str, bytes] = field(default_factory=dict)
    ports: list[int] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not self.image:
            raise ValueError("ContainerSpec.image must be non-empty")


@dataclass
class ExecResult:
    """Captured outcome of one in-sandbox execution."""

    stdout: bytes
    stderr: bytes
    exit_status: int
    duration: float
    timed_out: bool = False

    @property
    def text(self) -> str:
        """stdout then stderr, decoded leniently.

        The concatenation order is part of the observation contract: error
        text follows regular output.
        """
        out = self.stdout.decode("utf-8", "replace")
        err = self.stderr.decode("utf-8", "replace")
        if out and err and not out.endswith("\n"):
            return out + "\n" + err
        return out + err

    @property
    def ok(self) -> bool:
        return self.exit_status == 0 and not self.timed_out


class ContainerHandle(ABC):
    """One provisioned sandbox.

    Handles are single-session: calls are serialized by an internal lock,
    and one handle hosts at most one episode at a time. Distinct handles
    are fully independent.
    """

    def __init__(self, spec: ContainerSpec):
        self.spec = spec
        self._lock = threading.RLock()
        self._closed = False

    # -- execution ---------------------------------------------------

    @abstractmethod
    def exec_action(self, code: str, timeout: float = DEFAULT_EXEC_TIMEOUT) -> ExecResult:
        """Run agent code under the episode shell.

        Shell state (cwd, exported variables) persists across calls until
        ``reset_shell_state``. Output is captured fully up to the backend
        byte cap; on timeout the in-sandbox process is terminated and the
        result carries ``timed_out=True`` with the sentinel exit status.
        """

    @abstractmethod
    def run(self, command: str, timeout: float = DEFAULT_EXEC_TIMEOUT, cwd: str | None = None) -> ExecResult:
        """Run a stateless plumbing command (no episode shell state)."""

    # -- files -------------------------------------------------------

    @abstractmethod
    def put_file(self, path: str, data: bytes, mode: int = 0o644) -> None:
        """Stage bytes at an absolute sandbox path, creating parents."""

    @abstractmethod
    def get_file(self, path: str) -> bytes | None:
        """Fetch file bytes, or None if the path is missing."""

    @abstractmethod
    def hash_file(self, path: str) -> str | None:
        """md5 hex digest of the file's bytes; None if missing.

        Raises IsADirectoryError when the path names a directory, so
        callers can distinguish "absent" from "not a file".
        """

    @abstractmethod
    def scratch_path(self, name: str) -> str:
        """Private per-sandbox scratch location, safe to embed in commands.

        Lives outside any watched tree and outside agent working
        directories; distinct handles never share scratch.
        """

    # -- lifecycle ---------------------------------------------------

    @abstractmethod
    def reset_shell_state(self) -> None:
        """Drop episode shell state (cwd, exported vars) for a fresh episode."""

    def snapshot_reset(
        self,
        reset_commands: list[str],
        cwd: str,
        verify_command: str | None = None,
    ) -> None:
        """Restore a watched tree to its provision-time state.

        Runs each reset command (in ``cwd``); a nonzero exit is a
        ``ResetError`` and the environment must refuse to start the next
        episode. When ``verify_command`` is given, its output must be
        empty afterwards (an empty change listing).
        """
        for command in reset_commands:
            res = self.run(command, cwd=cwd)
            if not res.ok:
                raise ResetError(
                    f"reset command failed ({command!r}, exit {res.exit_status}): "
                    f"{res.stderr.decode('utf-8', 'replace').strip()}"
                )
        if verify_command is not None:
            res = self.run(verify_command, cwd=cwd)
            if not res.ok:
                raise ResetError(f"reset verification command failed: {verify_command!r}")
            if res.stdout.strip():
                raise ResetError(
                    f"tree not clean after reset: {res.stdout.decode('utf-8', 'replace').strip()!r}"
                )

    @abstractmethod
    def close(self) -> None:
        """Stop and remove the sandbox. Idempotent; the handle is dead after."""

    @property
    def alive(self) -> bool:
        return not self._closed


class ContainerBackend(ABC):
    """Factory for sandboxes. Shareable across threads."""

    name: str = "abstract"

    @abstractmethod
    def provision(self, spec: ContainerSpec) -> ContainerHandle:
        """Create, start, and initialize a sandbox; ready for exec on return."""


def clipped(data: bytes, cap: int = OUTPUT_BYTE_CAP) -> bytes:
    return data if len(data) <= cap else data[:cap]
