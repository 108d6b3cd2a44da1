"""Subprocess backend: sandboxes as scratch directories on the host.

Each provisioned "container" is a scratch directory; absolute sandbox
paths (``/testbed/x``) map onto it, so environments and fixtures behave
identically under this backend and the engine-backed one. Images are
resolved through a registry mapping image names to setup commands — the
same scripts the corresponding Dockerfiles bake in.

This backend executes directly on the host and is NOT an isolation
boundary. It exists for fixtures, CI, and development on machines without
a container engine; untrusted agents belong on the engine backend.
"""

from __future__ import annotations

import hashlib
import logging
import os
import shutil
import signal
import subprocess
import tempfile
import time
from pathlib import Path

from ..errors import InfrastructureError, ProvisionError
from . import shellstate
from .base import (
    DEFAULT_EXEC_TIMEOUT,
    TIMEOUT_EXIT_STATUS,
    ContainerBackend,
    ContainerHandle,
    ContainerSpec,
    ExecResult,
    clipped,
)

logger = logging.getLogger(__name__)

# Kill grace after the deadline before giving up on collecting output.
_KILL_GRACE = 5.0


class LocalContainerHandle(ContainerHandle):
    def __init__(self, spec: ContainerSpec, root: Path, ctrl: Path):
        super().__init__(spec)
        self.root = root
        self.ctrl = ctrl
        self._write_runner()

    # -- path mapping --------------------------------------------------

    def host_path(self, path: str) -> Path:
        """Map a sandbox path onto the scratch directory."""
        p = Path(path)
        if p.is_absolute():
            return self.root / p.relative_to("/")
        return self.root / p

    def _normalize(self, data: bytes) -> bytes:
        """Present scratch-directory paths as stable sandbox paths.

        Keeps observations byte-stable across re-provisioned sandboxes
        (``pwd`` prints ``/testbed``, not the host scratch path), which
        twin comparison and replay determinism rely on.
        """
        root = str(self.root).encode()
        ctrl = str(self.ctrl).encode()
        data = data.replace(ctrl, b"/tmp/.execgym")
        data = data.replace(root + b"/", b"/")
        return data.replace(root, b"/")

    def _write_runner(self) -> None:
        runner = shellstate.render_runner(str(self.ctrl), str(self.root))
        (self.ctrl / shellstate.RUNNER_FILE).write_text(runner)

    def _env(self) -> dict[str, str]:
        env = {
            "PATH": os.environ.get("PATH", "/usr/bin:/bin"),
            "HOME": str(self.root),
            "LC_ALL": "C",
            "LANG": "C",
            "TERM": "dumb",
        }
        env.update(self.spec.env_vars)
        return env

    def _popen(self, argv: list[str], cwd: Path, timeout: float) -> ExecResult:
        start = time.monotonic()
        proc = subprocess.Popen(
            argv,
            cwd=str(cwd),
            env=self._env(),
            stdin=subprocess.DEVNULL,
            stdout=subprocess.PIPE,
            stderr=subprocess.PIPE,
            start_new_session=True,
        )
        timed_out = False
        try:
            out, err = proc.communicate(timeout=timeout)
        except subprocess.TimeoutExpired:
            timed_out = True
            try:
                os.killpg(proc.pid, signal.SIGKILL)
            except ProcessLookupError:
                pass
            try:
                out, err = proc.communicate(timeout=_KILL_GRACE)
            except subprocess.TimeoutExpired:
                proc.kill()
                out, err = b"", b""
        duration = time.monotonic() - start
        status = TIMEOUT_EXIT_STATUS if timed_out else proc.returncode
        return ExecResult(
            stdout=clipped(self._normalize(out or b"")),
            stderr=clipped(self._normalize(err or b"")),
            exit_status=status,
            duration=duration,
            timed_out=timed_out,
        )

    # -- ContainerHandle -------------------------------------------------

    def exec_action(self, code: str, timeout: float = DEFAULT_EXEC_TIMEOUT) -> ExecResult:
        with self._lock:
            self._require_alive()
            (self.ctrl / shellstate.CMD_FILE).write_text(code if code.endswith("\n") else code + "\n")
            return self._popen(
                ["bash", str(self.ctrl / shellstate.RUNNER_FILE)],
                cwd=self.root,
                timeout=timeout,
            )

    def run(self, command: str, timeout: float = DEFAULT_EXEC_TIMEOUT, cwd: str | None = None) -> ExecResult:
        with self._lock:
            self._require_alive()
            workdir = self.host_path(cwd) if cwd else self.root
            if not workdir.is_dir():
                raise InfrastructureError(f"cwd does not exist in sandbox: {cwd}")
            return self._popen(["bash", "-c", command], cwd=workdir, timeout=timeout)

    def put_file(self, path: str, data: bytes, mode: int = 0o644) -> None:
        with self._lock:
            self._require_alive()
            target = self.host_path(path)
            target.parent.mkdir(parents=True, exist_ok=True)
            target.write_bytes(data)
            target.chmod(mode)

    def get_file(self, path: str) -> bytes | None:
        target = self.host_path(path)
        if not target.exists():
            return None
        if target.is_dir():
            raise IsADirectoryError(path)
        return target.read_bytes()

    def hash_file(self, path: str) -> str | None:
        target = self.host_path(path)
        if not target.exists():
            return None
        if target.is_dir():
            raise IsADirectoryError(path)
        return hashlib.md5(target.read_bytes()).hexdigest()

    def scratch_path(self, name: str) -> str:
        scratch = self.ctrl / "scratch"
        scratch.mkdir(exist_ok=True)
        return str(scratch / name)

    def reset_shell_state(self) -> None:
        for name in (shellstate.CWD_FILE, shellstate.ENV_FILE, shellstate.CMD_FILE):
            try:
                (self.ctrl / name).unlink()
            except FileNotFoundError:
                pass

    def close(self) -> None:
        with self._lock:
            if self._closed:
                return
            self._closed = True
            for tree in (self.root, self.ctrl):
                shutil.rmtree(tree, ignore_errors=True)

    def _require_alive(self) -> None:
        if self._closed:
            raise InfrastructureError("sandbox is closed")


class LocalBackend(ContainerBackend):
    """Backend over host subprocesses and scratch directories.

    ``image_registry`` maps image names to the setup commands that
    materialize the image's task setting inside a fresh sandbox (run with
    the sandbox root as working directory). Unknown images fail
    provisioning, mirroring a missing image with pulls disabled.
    """

    name = "local"

    def __init__(self, base_dir: str | Path | None = None):
        self.base_dir = Path(base_dir) if base_dir else Path(tempfile.gettempdir()) / "execgym-local"
        self.base_dir.mkdir(parents=True, exist_ok=True)
        self.image_registry: dict[str, list[str]] = {}

    def register_image(self, image: str, setup_commands: list[str]) -> None:
        self.image_registry[image] = list(setup_commands)

    def provision(self, spec: ContainerSpec) -> LocalContainerHandle:
        if spec.image not in self.image_registry:
            raise ProvisionError(
                f"image {spec.image!r} is not registered with the local backend"
            )
        stamp = tempfile.mkdtemp(prefix="sbx-", dir=self.base_dir)
        root = Path(stamp) / "root"
        ctrl = Path(stamp) / "ctrl"
        root.mkdir()
        ctrl.mkdir()
        handle = LocalContainerHandle(spec, root=root, ctrl=ctrl)
        try:
            for path, data in spec.files.items():
                handle.put_file(path, data)
            for command in self.image_registry[spec.image] + list(spec.init_script):
                res = handle.run(command, timeout=120.0)
                if not res.ok:
                    raise ProvisionError(
                        f"init command failed ({command!r}, exit {res.exit_status}): "
                        f"{res.stderr.decode('utf-8', 'replace').strip()}"
                    )
        except Exception:
            handle.close()
            raise
        logger.debug("provisioned local sandbox %s for image %s", root, spec.image)
        return handle
