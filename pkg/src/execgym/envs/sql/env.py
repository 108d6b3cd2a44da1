"""Relational-database environment.

Actions are SQL statements; observations are rendered record lists (or
the engine's error text, which makes the action non-admissible). Scoring
compares the latest execution output against the reference statement's
output on the same database.

Fixture instructions are read-only, so no state reset runs between
episodes; a guard refuses datasets whose reference statements mutate
state unless a reset script is configured.
"""

from __future__ import annotations

import logging
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Any

from ...backend.base import ContainerBackend, ContainerSpec
from ...core.env import Environment
from ...core.truncate import truncate_observation
from ...core.types import ActionRecord, Observation, TaskInstance
from ...errors import DatasetValidationError, EvaluationError
from .executor import MySqlExecutor, SqlExecutor, SqliteExecutor, guard_read_only
from .records import ResultSet
from .reward import SqlRewardBreakdown, sql_reward

logger = logging.getLogger(__name__)


class SqlSessionProvider(ABC):
    """Hands out executors per database name; owns engine lifecycle."""

    name = "abstract"

    @abstractmethod
    def get(self, database: str) -> SqlExecutor: ...

    def close(self) -> None: ...


class SqliteSessionProvider(SqlSessionProvider):
    """Embedded databases materialized from the shipped dump files."""

    name = "sqlite"

    def __init__(self, dumps: dict[str, Path]):
        self.dumps = dumps
        self._executors: dict[str, SqliteExecutor] = {}

    def get(self, database: str) -> SqlExecutor:
        if database not in self._executors:
            if database not in self.dumps:
                raise EvaluationError(f"unknown database {database!r}")
            self._executors[database] = SqliteExecutor(self.dumps[database].read_text())
        return self._executors[database]

    def close(self) -> None:
        for executor in self._executors.values():
            executor.close()
        self._executors.clear()


class MySqlSessionProvider(SqlSessionProvider):
    """One database container serving every database in the dump set.

    The dumps are concatenated with database-selection headers and staged
    into the image's init directory; the server loads them on first start.
    Table-name resolution is case-insensitive in the container config.
    """

    name = "mysql"

    def __init__(
        self,
        backend: ContainerBackend,
        dumps: dict[str, Path],
        image: str = "execgym-sql:latest",
        root_password: str = "sandbox",
        port: int = 3306,
    ):
        self.backend = backend
        self.dumps = dumps
        self.image = image
        self.root_password = root_password
        self.port = port
        self._handle = None
        self._executors: dict[str, MySqlExecutor] = {}

    def _ensure_server(self) -> None:
        if self._handle is not None:
            return
        init_sql = []
        for name, path in sorted(self.dumps.items()):
            init_sql.append(f"CREATE DATABASE IF NOT EXISTS {name};\nUSE {name};\n" + path.read_text())
        spec = ContainerSpec(
            image=self.image,
            entry_mode="service",
            env_vars={
                "MYSQL_ROOT_PASSWORD": self.root_password,
                "MYSQL_ROOT_HOST": "%",
            },
            files={"/docker-entrypoint-initdb.d/000-fixtures.sql": "\n".join(init_sql).encode()},
            ports=[self.port],
        )
        self._handle = self.backend.provision(spec)

    def get(self, database: str) -> SqlExecutor:
        self._ensure_server()
        if database not in self._executors:
            host, port = self._endpoint()
            self._executors[database] = MySqlExecutor(
                host=host, port=port, password=self.root_password, database=database
            )
        return self._executors[database]

    def _endpoint(self) -> tuple[str, int]:
        published = getattr(self._handle, "published_ports", {})
        if self.port in published:
            return "127.0.0.1", published[self.port]
        address = getattr(self._handle, "ip_address", None)
        if address:
            return address, self.port
        raise EvaluationError("database container exposes no reachable endpoint")

    def close(self) -> None:
        for executor in self._executors.values():
            executor.close()
        self._executors.clear()
        if self._handle is not None:
            self._handle.close()
            self._handle = None


class SqlEnvironment(Environment):
    name = "sql"
    language = "SQL"
    setting = "MySQL-compatible relational database"

    def __init__(
        self,
        dataset: Any,
        provider: SqlSessionProvider,
        default_db: str | None = None,
        reset_script: str | None = None,
        **kwargs: Any,
    ):
        from ...data.loader import instances_from

        super().__init__(instances_from(dataset), **kwargs)
        self.provider = provider
        self.default_db = default_db
        self.reset_script = reset_script
        mutating = guard_read_only([inst.gold for inst in self.instances])
        if mutating and reset_script is None:
            raise DatasetValidationError(
                [(i, "gold mutates state but no reset script is configured")
                 for i, inst in enumerate(self.instances) if inst.gold in mutating]
            )
        self._executor: SqlExecutor | None = None
        self._last_result: ResultSet | None = None
        self._gold_result: ResultSet | None = None

    # ------------------------------------------------------------------

    def on_reset(self, instance: TaskInstance) -> None:
        self._executor = self.provider.get(self._db_of(instance))
        self._last_result = None
        self._gold_result = None
        if self.reset_script:
            self._executor.run(self.reset_script, timeout=self.exec_timeout)

    def execute_action(self, code: str) -> Observation:
        assert self._executor is not None
        result = self._executor.run(code, timeout=self.exec_timeout)
        self._last_result = result
        if result.is_tabular:
            error_class = "none"
        elif result.timed_out:
            error_class = "timeout"
        else:
            error_class = "exec_error"
        return truncate_observation(result.render(), cap=self.token_cap, error_class=error_class)

    def action_admissible(self, record: ActionRecord, obs: Observation) -> bool:
        return obs.error_class == "none"

    def compute_reward(self, submit: ActionRecord) -> tuple[float, SqlRewardBreakdown]:
        agent = self._last_result or ResultSet.error("no execution output")
        breakdown = sql_reward(agent, self._gold_output())
        return breakdown.total, breakdown

    def interim_reward(self) -> float | None:
        return self.compute_reward(ActionRecord(kind="submit"))[0]

    def on_close(self) -> None:
        self.provider.close()

    def sandbox_handle(self) -> Any:
        return self._executor

    def config_snapshot(self, instance: TaskInstance) -> dict[str, Any]:
        snapshot = super().config_snapshot(instance)
        snapshot.update({"db": self._db_of(instance), "engine": self.provider.name})
        return snapshot

    # ------------------------------------------------------------------

    def _gold_output(self) -> ResultSet:
        """Reference output, computed once per episode on the same database."""
        if self._gold_result is None:
            assert self.task is not None and self._executor is not None
            result = ResultSet.error("gold produced no output")
            for statement in self.gold_actions(self.task):
                result = self._executor.run(statement, timeout=self.exec_timeout)
            self._gold_result = result
        return self._gold_result

    def _db_of(self, instance: TaskInstance) -> str:
        db = instance.extras.get("db", self.default_db)
        if not db:
            raise EvaluationError(f"task {instance.id} names no database and no default is set")
        return str(db)
