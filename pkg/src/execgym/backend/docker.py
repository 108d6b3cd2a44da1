"""Container engine client: HTTP API over the local socket or TCP.

Implements exactly the endpoints the framework needs — create, start,
exec (with output stream demultiplexing), archive in/out, inspect,
remove, and the attach upgrade for bidirectional raw streams (used to
drive the interpreter mediator). Engine endpoint comes from the standard
environment variable with the local-socket default, overridable by
configuration.

Command execution uses an in-container ``timeout`` wrapper: the engine
API has no way to kill a running exec, so the sandbox enforces its own
deadline and the client's read timeout is only a backstop.
"""

from __future__ import annotations

import io
import logging
import os
import socket
import struct
import tarfile
import time
import urllib.parse
from dataclasses import dataclass
from typing import Any

import httpx

from ..errors import InfrastructureError, ProvisionError
from . import shellstate
from .base import (
    DEFAULT_EXEC_TIMEOUT,
    OUTPUT_BYTE_CAP,
    TIMEOUT_EXIT_STATUS,
    ContainerBackend,
    ContainerHandle,
    ContainerSpec,
    ExecResult,
    clipped,
)

logger = logging.getLogger(__name__)

ENGINE_ENV_VAR = "DOCKER_HOST"
DEFAULT_ENDPOINT = "unix:///var/run/docker.sock"
API_PREFIX = "/v1.41"

CTRL_DIR = "/tmp/.execgym"

# slack added to the engine read timeout beyond the in-container deadline
READ_GRACE = 15.0


@dataclass
class _Endpoint:
    kind: str  # "unix" | "tcp"
    uds_path: str = ""
    host: str = ""
    port: int = 0

    @property
    def base_url(self) -> str:
        if self.kind == "unix":
            return "http://docker"
        return f"http://{self.host}:{self.port}"


def _parse_endpoint(raw: str | None) -> _Endpoint:
    raw = raw or os.environ.get(ENGINE_ENV_VAR) or DEFAULT_ENDPOINT
    parsed = urllib.parse.urlparse(raw)
    if parsed.scheme in ("unix", ""):
        return _Endpoint(kind="unix", uds_path=parsed.path or raw)
    if parsed.scheme in ("tcp", "http"):
        return _Endpoint(kind="tcp", host=parsed.hostname or "127.0.0.1", port=parsed.port or 2375)
    raise InfrastructureError(f"unsupported engine endpoint {raw!r}")


class _StreamDemux:
    """Demultiplexer for the engine's framed stdout/stderr stream."""

    def __init__(self) -> None:
        self._buffer = b""
        self.stdout = b""
        self.stderr = b""

    def feed(self, chunk: bytes) -> None:
        self._buffer += chunk
        while len(self._buffer) >= 8:
            kind = self._buffer[0]
            (length,) = struct.unpack(">I", self._buffer[4:8])
            if len(self._buffer) < 8 + length:
                return
            payload = self._buffer[8 : 8 + length]
            self._buffer = self._buffer[8 + length :]
            if kind == 2:
                if len(self.stderr) < OUTPUT_BYTE_CAP:
                    self.stderr += payload
            else:
                if len(self.stdout) < OUTPUT_BYTE_CAP:
                    self.stdout += payload


class DockerEngineClient:
    """Thin, explicit wrapper over the engine HTTP API."""

    def __init__(self, endpoint: str | None = None, connect_timeout: float = 10.0):
        self.endpoint = _parse_endpoint(endpoint)
        self.connect_timeout = connect_timeout
        transport = (
            httpx.HTTPTransport(uds=self.endpoint.uds_path)
            if self.endpoint.kind == "unix"
            else httpx.HTTPTransport()
        )
        self._client = httpx.Client(
            base_url=self.endpoint.base_url + API_PREFIX,
            transport=transport,
            timeout=httpx.Timeout(60.0, connect=connect_timeout),
        )

    # -- plumbing ------------------------------------------------------

    def _request(self, method: str, path: str, **kwargs: Any) -> httpx.Response:
        try:
            response = self._client.request(method, path, **kwargs)
        except httpx.HTTPError as exc:
            raise InfrastructureError(f"engine unreachable ({method} {path}): {exc}") from exc
        if response.status_code >= 400:
            raise InfrastructureError(
                f"engine error {response.status_code} on {method} {path}: "
                f"{response.text[:300]}"
            )
        return response

    def close(self) -> None:
        self._client.close()

    # -- engine ops ------------------------------------------------------

    def ping(self) -> None:
        self._request("GET", "/_ping")

    def create_container(self, config: dict[str, Any]) -> str:
        response = self._request("POST", "/containers/create", json=config)
        return response.json()["Id"]

    def start_container(self, container_id: str) -> None:
        self._request("POST", f"/containers/{container_id}/start")

    def inspect_container(self, container_id: str) -> dict[str, Any]:
        return self._request("GET", f"/containers/{container_id}/json").json()

    def remove_container(self, container_id: str) -> None:
        self._request("DELETE", f"/containers/{container_id}", params={"force": "1", "v": "1"})

    def put_archive(self, container_id: str, tar_bytes: bytes, path: str = "/") -> None:
        self._request(
            "PUT",
            f"/containers/{container_id}/archive",
            params={"path": path},
            content=tar_bytes,
            headers={"Content-Type": "application/x-tar"},
        )

    def get_archive(self, container_id: str, path: str) -> bytes | None:
        try:
            response = self._client.request(
                "GET", f"/containers/{container_id}/archive", params={"path": path}
            )
        except httpx.HTTPError as exc:
            raise InfrastructureError(f"engine unreachable (get_archive): {exc}") from exc
        if response.status_code == 404:
            return None
        if response.status_code >= 400:
            raise InfrastructureError(
                f"engine error {response.status_code} fetching archive of {path}"
            )
        return response.content

    def exec_create(
        self,
        container_id: str,
        cmd: list[str],
        workdir: str | None = None,
        env: dict[str, str] | None = None,
    ) -> str:
        config: dict[str, Any] = {
            "Cmd": cmd,
            "AttachStdout": True,
            "AttachStderr": True,
            "Tty": False,
        }
        if workdir:
            config["WorkingDir"] = workdir
        if env:
            config["Env"] = [f"{k}={v}" for k, v in env.items()]
        response = self._request("POST", f"/containers/{container_id}/exec", json=config)
        return response.json()["Id"]

    def exec_start(self, exec_id: str, read_timeout: float) -> tuple[bytes, bytes]:
        demux = _StreamDemux()
        timeout = httpx.Timeout(read_timeout, connect=self.connect_timeout)
        try:
            with self._client.stream(
                "POST",
                f"/exec/{exec_id}/start",
                json={"Detach": False, "Tty": False},
                timeout=timeout,
            ) as response:
                if response.status_code >= 400:
                    raise InfrastructureError(
                        f"engine error {response.status_code} starting exec"
                    )
                for chunk in response.iter_bytes():
                    demux.feed(chunk)
        except httpx.HTTPError as exc:
            raise InfrastructureError(f"engine stream failed mid-exec: {exc}") from exc
        return demux.stdout, demux.stderr

    def exec_inspect(self, exec_id: str) -> dict[str, Any]:
        return self._request("GET", f"/exec/{exec_id}/json").json()

    # -- attach (hijacked bidirectional stream) --------------------------

    def attach_socket(self, container_id: str, read_timeout: float = 60.0) -> "AttachPipe":
        """Upgrade to the raw attach stream of the container's main process.

        Returns a pipe speaking raw bytes toward stdin and demultiplexed
        stdout bytes back.
        """
        sock = self._raw_socket()
        path = f"{API_PREFIX}/containers/{container_id}/attach?stream=1&stdin=1&stdout=1&stderr=1"
        host = "docker" if self.endpoint.kind == "unix" else f"{self.endpoint.host}:{self.endpoint.port}"
        request = (
            f"POST {path} HTTP/1.1\r\n"
            f"Host: {host}\r\n"
            "Connection: Upgrade\r\n"
            "Upgrade: tcp\r\n"
            "Content-Length: 0\r\n"
            "\r\n"
        ).encode("ascii")
        sock.sendall(request)
        status, leftover = _read_http_head(sock, self.connect_timeout)
        if status not in (101, 200):
            sock.close()
            raise InfrastructureError(f"attach upgrade rejected with status {status}")
        return AttachPipe(sock, leftover, read_timeout)

    def _raw_socket(self) -> socket.socket:
        try:
            if self.endpoint.kind == "unix":
                sock = socket.socket(socket.AF_UNIX, socket.SOCK_STREAM)
                sock.settimeout(self.connect_timeout)
                sock.connect(self.endpoint.uds_path)
                return sock
            return socket.create_connection(
                (self.endpoint.host, self.endpoint.port), timeout=self.connect_timeout
            )
        except OSError as exc:
            raise InfrastructureError(f"engine socket unreachable: {exc}") from exc


def _read_http_head(sock: socket.socket, timeout: float) -> tuple[int, bytes]:
    sock.settimeout(timeout)
    buffer = b""
    while b"\r\n\r\n" not in buffer:
        chunk = sock.recv(4096)
        if not chunk:
            raise InfrastructureError("engine closed the attach connection during upgrade")
        buffer += chunk
    head, _, leftover = buffer.partition(b"\r\n\r\n")
    try:
        status = int(head.split(b"\r\n", 1)[0].split()[1])
    except (IndexError, ValueError) as exc:
        raise InfrastructureError(f"malformed attach response: {head[:100]!r}") from exc
    return status, leftover


class AttachPipe:
    """File-like bridge over a hijacked attach connection.

    ``write`` sends raw bytes to the process stdin; ``read`` returns
    demultiplexed stdout bytes, honoring a per-pipe deadline budget.
    """

    def __init__(self, sock: socket.socket, leftover: bytes, read_timeout: float):
        self._sock = sock
        self._demux = _StreamDemux()
        self.read_timeout = read_timeout
        if leftover:
            self._demux.feed(leftover)

    def write(self, data: bytes) -> None:
        self._sock.sendall(data)

    def flush(self) -> None:  # file-like parity for the frame codec
        pass

    def read(self, n: int) -> bytes:
        deadline = time.monotonic() + self.read_timeout
        while not self._demux.stdout:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise TimeoutError("attach stream produced no data before the deadline")
            self._sock.settimeout(remaining)
            try:
                chunk = self._sock.recv(65536)
            except socket.timeout as exc:
                raise TimeoutError("attach stream produced no data before the deadline") from exc
            if not chunk:
                return b""
            self._demux.feed(chunk)
        out = self._demux.stdout[:n]
        self._demux.stdout = self._demux.stdout[len(out):]
        return out

    def close(self) -> None:
        try:
            self._sock.close()
        except OSError:
            pass


# ----------------------------------------------------------------------
# backend over the engine client
# ----------------------------------------------------------------------


class DockerContainerHandle(ContainerHandle):
    def __init__(self, spec: ContainerSpec, client: DockerEngineClient, container_id: str):
        super().__init__(spec)
        self.client = client
        self.container_id = container_id
        self.published_ports: dict[int, int] = {}
        self.ip_address: str | None = None

    # -- execution -----------------------------------------------------

    def exec_action(self, code: str, timeout: float = DEFAULT_EXEC_TIMEOUT) -> ExecResult:
        with self._lock:
            self._require_alive()
            self.put_file(f"{CTRL_DIR}/{shellstate.CMD_FILE}", (code + "\n").encode())
            argv = [
                "timeout", "-k", "2", str(max(1, int(timeout))),
                "bash", f"{CTRL_DIR}/{shellstate.RUNNER_FILE}",
            ]
            return self._exec(argv, timeout, workdir=self.spec.workdir, wrapped=True)

    def run(self, command: str, timeout: float = DEFAULT_EXEC_TIMEOUT, cwd: str | None = None) -> ExecResult:
        with self._lock:
            self._require_alive()
            return self._exec(
                ["bash", "-c", command], timeout, workdir=cwd or self.spec.workdir, wrapped=False
            )

    def _exec(self, argv: list[str], timeout: float, workdir: str, wrapped: bool) -> ExecResult:
        env = {"LC_ALL": "C", "LANG": "C", "TERM": "dumb"}
        env.update(self.spec.env_vars)
        started = time.monotonic()
        exec_id = self.client.exec_create(self.container_id, argv, workdir=workdir, env=env)
        stdout, stderr = self.client.exec_start(exec_id, read_timeout=timeout + READ_GRACE)
        duration = time.monotonic() - started
        inspected = self.client.exec_inspect(exec_id)
        status = inspected.get("ExitCode")
        status = -1 if status is None else int(status)
        timed_out = wrapped and status in (124, 137) and duration >= timeout * 0.9
        return ExecResult(
            stdout=clipped(stdout),
            stderr=clipped(stderr),
            exit_status=TIMEOUT_EXIT_STATUS if timed_out else status,
            duration=duration,
            timed_out=timed_out,
        )

    # -- files -----------------------------------------------------------

    def put_file(self, path: str, data: bytes, mode: int = 0o644) -> None:
        self._require_alive()
        self.client.put_archive(self.container_id, _tar_single(path, data, mode), path="/")

    def get_file(self, path: str) -> bytes | None:
        self._require_alive()
        blob = self.client.get_archive(self.container_id, path)
        if blob is None:
            return None
        with tarfile.open(fileobj=io.BytesIO(blob)) as tar:
            for member in tar.getmembers():
                if member.isdir():
                    raise IsADirectoryError(path)
                extracted = tar.extractfile(member)
                if extracted is not None:
                    return extracted.read()
        return None

    def hash_file(self, path: str) -> str | None:
        quoted = "'" + path.replace("'", "'\\''") + "'"
        result = self.run(f"md5sum -- {quoted}", timeout=60.0)
        if result.exit_status == 0:
            return result.stdout.decode("utf-8", "replace").split()[0]
        stderr = result.stderr.decode("utf-8", "replace")
        if "Is a directory" in stderr:
            raise IsADirectoryError(path)
        return None

    def scratch_path(self, name: str) -> str:
        return f"{CTRL_DIR}/scratch/{name}"

    def reset_shell_state(self) -> None:
        self.run(f"rm -f {CTRL_DIR}/{shellstate.CWD_FILE} {CTRL_DIR}/{shellstate.ENV_FILE}")

    # -- lifecycle ---------------------------------------------------------

    def close(self) -> None:
        with self._lock:
            if self._closed:
                return
            self._closed = True
            try:
                self.client.remove_container(self.container_id)
            except InfrastructureError as exc:
                logger.warning("container %s removal trouble: %s", self.container_id[:12], exc)

    def _require_alive(self) -> None:
        if self._closed:
            raise InfrastructureError("container handle is closed")


class DockerBackend(ContainerBackend):
    name = "docker"

    def __init__(self, endpoint: str | None = None):
        self.client = DockerEngineClient(endpoint=endpoint)

    def ping(self) -> None:
        self.client.ping()

    def provision(self, spec: ContainerSpec) -> DockerContainerHandle:
        config: dict[str, Any] = {
            "Image": spec.image,
            "Env": [f"{k}={v}" for k, v in spec.env_vars.items()],
            "WorkingDir": spec.workdir,
        }
        if spec.entry_mode == "shell":
            config["Cmd"] = ["sleep", "infinity"]
        if spec.ports:
            config["ExposedPorts"] = {f"{p}/tcp": {} for p in spec.ports}
            config["HostConfig"] = {
                "PortBindings": {f"{p}/tcp": [{"HostPort": ""}] for p in spec.ports}
            }
        try:
            container_id = self.client.create_container(config)
        except InfrastructureError as exc:
            raise ProvisionError(f"create failed for image {spec.image!r}: {exc}") from exc
        handle = DockerContainerHandle(spec, self.client, container_id)
        try:
            for path, data in spec.files.items():
                handle.put_file(path, data)
            self.client.start_container(container_id)
            if spec.entry_mode == "shell":
                runner = shellstate.render_runner(CTRL_DIR, spec.workdir)
                handle.put_file(f"{CTRL_DIR}/{shellstate.RUNNER_FILE}", runner.encode())
                handle.run(f"mkdir -p {CTRL_DIR}/scratch")
            for command in spec.init_script:
                result = handle.run(command, timeout=300.0)
                if not result.ok:
                    raise ProvisionError(
                        f"init command failed ({command!r}, exit {result.exit_status}): "
                        f"{result.stderr.decode('utf-8', 'replace').strip()}"
                    )
            self._collect_network(handle)
        except Exception:
            handle.close()
            raise
        return handle

    def _collect_network(self, handle: DockerContainerHandle) -> None:
        info = self.client.inspect_container(handle.container_id)
        ports = (info.get("NetworkSettings") or {}).get("Ports") or {}
        for key, bindings in ports.items():
            if not bindings:
                continue
            try:
                container_port = int(key.split("/")[0])
                handle.published_ports[container_port] = int(bindings[0]["HostPort"])
            except (KeyError, ValueError, IndexError):
                continue
        handle.ip_address = ((info.get("NetworkSettings") or {}).get("IPAddress")) or None


def _tar_single(path: str, data: bytes, mode: int) -> bytes:
    buffer = io.BytesIO()
    with tarfile.open(fileobj=buffer, mode="w") as tar:
        info = tarfile.TarInfo(name=path.lstrip("/"))
        info.size = len(data)
        info.mode = mode
        info.mtime = int(time.time())
        tar.addfile(info, io.BytesIO(data))
    return buffer.getvalue()


# ----------------------------------------------------------------------
# interpreter sessions over attach
# ----------------------------------------------------------------------


class DockerInterpreterSession:
    """Interpreter mediator inside a container, driven over attach."""

    def __init__(self, backend: DockerBackend, image: str = "execgym-python:latest"):
        self.backend = backend
        self.image = image
        self._handle: DockerContainerHandle | None = None
        self._pipe: AttachPipe | None = None
        self._start()

    def _start(self) -> None:
        from ..envs.python.session import MEDIATOR_PATH

        config = {
            "Image": self.image,
            "Cmd": ["python3", "/opt/execgym/mediator.py"],
            "OpenStdin": True,
            "StdinOnce": False,
            "WorkingDir": "/",
            "Env": ["PYTHONUNBUFFERED=1"],
        }
        container_id = self.backend.client.create_container(config)
        self._handle = DockerContainerHandle(
            ContainerSpec(image=self.image, entry_mode="service"), self.backend.client, container_id
        )
        self._handle.put_file("/opt/execgym/mediator.py", MEDIATOR_PATH.read_bytes())
        self.backend.client.start_container(container_id)
        self._pipe = self.backend.client.attach_socket(container_id)

    def request(self, op: str, code: str = "", timeout: float = 60.0) -> dict[str, Any]:
        from ..envs.python import frames
        from ..envs.python.session import DEADLINE_GRACE, SessionCrash

        if self._pipe is None or self._handle is None:
            self._restart()
            raise SessionCrash("interpreter container was dead; restarted")
        try:
            self._pipe.read_timeout = timeout + DEADLINE_GRACE
            frames.write_frame(self._pipe, {"op": op, "code": code, "timeout": timeout})
            return frames.read_frame(self._pipe)
        except (frames.FrameError, TimeoutError, OSError) as exc:
            self._restart()
            raise SessionCrash(f"interpreter container failed ({exc}); restarted") from exc

    def _restart(self) -> None:
        self.close()
        self._start()

    def close(self) -> None:
        if self._pipe is not None:
            self._pipe.close()
            self._pipe = None
        if self._handle is not None:
            self._handle.close()
            self._handle = None


def docker_session_factory(backend: DockerBackend, image: str = "execgym-python:latest"):
    def factory() -> DockerInterpreterSession:
        return DockerInterpreterSession(backend, image=image)

    return factory
