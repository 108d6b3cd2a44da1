"""Shipped fixture assets: file-system builders, databases, task bundles.

Fixture trees are materialized by idempotent shell scripts; the shipped
Dockerfiles bake the same scripts into images, and the local backend runs
them at provision time, so both backends present identical task settings.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from ..backend.local import LocalBackend

BASH_IMAGE_PREFIX = "execgym-bash:fs"
SQL_IMAGE = "execgym-sql:latest"
PYTHON_IMAGE = "execgym-python:latest"
CTF_IMAGE = "execgym-ctf:latest"


def fixture_path(*parts: str) -> Path:
    """Absolute path of a shipped fixture file."""
    root = resources.files(__package__)
    out = root.joinpath(*parts)
    return Path(str(out))


def register_builtin_images(backend: LocalBackend) -> None:
    """Teach a local backend how to materialize the shipped images."""
    for n in (1, 2, 3):
        script = fixture_path("bash", f"fs_{n}.sh")
        backend.register_image(f"{BASH_IMAGE_PREFIX}{n}", [f"bash {_q(script)}"])
    # service-style sandboxes need no tree; the environments stage their own files
    backend.register_image(SQL_IMAGE, [])
    backend.register_image(PYTHON_IMAGE, [])
    backend.register_image(CTF_IMAGE, ["mkdir -p ctf"])


def _q(path: Path) -> str:
    return "'" + str(path).replace("'", "'\\''") + "'"
