"""Shared fixtures: one local backend and the shipped fixture datasets."""

from __future__ import annotations

import pytest

from execgym.backend.local import LocalBackend
from execgym.data.loader import load
from execgym.fixtures import fixture_path, register_builtin_images


@pytest.fixture(scope="session")
def local_backend(tmp_path_factory):
    backend = LocalBackend(base_dir=tmp_path_factory.mktemp("shared-sandboxes"))
    register_builtin_images(backend)
    return backend


@pytest.fixture(scope="session")
def bash_instances():
    return load(fixture_path("bash", "dataset.json"))[1]


@pytest.fixture(scope="session")
def sql_instances():
    return load(fixture_path("sql", "dataset.json"))[1]


@pytest.fixture(scope="session")
def python_instances():
    return load(fixture_path("python", "dataset.json"))[1]


@pytest.fixture(scope="session")
def sql_dumps():
    return {path.stem: path for path in fixture_path("sql").glob("*.sql")}
