"""Environment registry and backend resolution.

``make_env`` wires a named environment to its dataset, sandbox backend,
and engine-specific plumbing with shipped-fixture defaults, so the CLI,
the session service, and tests construct environments the same way.
"""

from __future__ import annotations

import os
from pathlib import Path
from typing import Any

from ..backend.base import ContainerBackend
from ..backend.local import LocalBackend
from ..core.env import Environment
from ..fixtures import fixture_path, register_builtin_images

ENV_NAMES = ("bash", "sql", "python", "ctf")


def resolve_backend(kind: str = "auto", endpoint: str | None = None) -> ContainerBackend:
    """Pick the sandbox backend.

    "docker" talks to the engine (endpoint from DOCKER_HOST or the
    standard local socket); "local" runs subprocess sandboxes; "auto"
    prefers the engine when it answers a ping and falls back to local.
    """
    kind = kind or os.environ.get("EXECGYM_BACKEND", "auto")
    if kind == "local":
        return _local_backend()
    if kind == "docker":
        from ..backend.docker import DockerBackend

        return DockerBackend(endpoint=endpoint)
    if kind == "auto":
        try:
            from ..backend.docker import DockerBackend

            backend = DockerBackend(endpoint=endpoint)
            backend.ping()
            return backend
        except Exception:
            return _local_backend()
    raise ValueError(f"unknown backend kind {kind!r}")


def _local_backend() -> LocalBackend:
    backend = LocalBackend()
    register_builtin_images(backend)
    return backend


def default_dataset_path(env_name: str) -> Path:
    if env_name == "ctf":
        return fixture_path("ctf", "tasks")
    return fixture_path(env_name, "dataset.json")


def make_env(
    env_name: str,
    dataset: Any = None,
    backend: ContainerBackend | None = None,
    traj_dir: str | None = None,
    **kwargs: Any,
) -> Environment:
    """Construct a ready environment; fixture dataset when none is given."""
    if env_name not in ENV_NAMES:
        raise ValueError(f"unknown environment {env_name!r}; expected one of {ENV_NAMES}")
    backend = backend or resolve_backend()
    if env_name == "bash":
        from .bash.env import BashEnvironment

        return BashEnvironment(
            dataset or default_dataset_path("bash"), backend, traj_dir=traj_dir, **kwargs
        )
    if env_name == "sql":
        from .sql.env import MySqlSessionProvider, SqlEnvironment, SqliteSessionProvider

        dumps = kwargs.pop("dumps", None) or {
            path.stem: path for path in fixture_path("sql").glob("*.sql")
        }
        if isinstance(backend, LocalBackend):
            provider = SqliteSessionProvider(dumps)
        else:
            provider = MySqlSessionProvider(backend, dumps)
        return SqlEnvironment(
            dataset or default_dataset_path("sql"), provider, traj_dir=traj_dir, **kwargs
        )
    if env_name == "python":
        from .python.env import PythonEnvironment
        from .python.session import local_session_factory

        if isinstance(backend, LocalBackend):
            factory = kwargs.pop("session_factory", None) or local_session_factory()
        else:
            from ..backend.docker import docker_session_factory

            factory = kwargs.pop("session_factory", None) or docker_session_factory(backend)
        return PythonEnvironment(
            dataset or default_dataset_path("python"), factory, traj_dir=traj_dir, **kwargs
        )
    from .ctf.bundle import load_bundles
    from .ctf.env import CtfEnvironment

    bundles, instances = load_bundles(dataset or default_dataset_path("ctf"))
    return CtfEnvironment(instances, backend, bundles, traj_dir=traj_dir, **kwargs)
