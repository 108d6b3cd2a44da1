"""Statement execution against a relational database.

Two engines sit behind one surface: an embedded sqlite engine fed from
the shipped dump files (engine-less machines, CI), and a MySQL client for
the containerized database (dump loaded through the image's init
directory). Statement errors come back as non-tabular result sets — the
action was executed and rejected, which is task feedback, not an
infrastructure failure.
"""

from __future__ import annotations

import re
import sqlite3
import threading
import time
from abc import ABC, abstractmethod

from ...errors import InfrastructureError
from .records import ResultSet

_SHOW_TABLES_RE = re.compile(r"^\s*show\s+tables\s*;?\s*$", re.IGNORECASE)
_DESCRIBE_RE = re.compile(r"^\s*desc(?:ribe)?\s+([A-Za-z_]\w*)\s*;?\s*$", re.IGNORECASE)

MUTATING_KEYWORDS = re.compile(
    r"\b(insert|update|delete|drop|alter|truncate|create|replace|grant|revoke)\b",
    re.IGNORECASE,
)


class SqlExecutor(ABC):
    @abstractmethod
    def run(self, statement: str, timeout: float = 60.0) -> ResultSet: ...

    @abstractmethod
    def close(self) -> None: ...


class SqliteExecutor(SqlExecutor):
    """Embedded engine over one database materialized from a dump.

    A small shim translates the common interactive meta-statements
    (``SHOW TABLES``, ``DESC <table>``) so exploration behaves like the
    containerized database.
    """

    def __init__(self, init_sql: str):
        self._conn = sqlite3.connect(":memory:", check_same_thread=False)
        self._conn.executescript(init_sql)
        self._lock = threading.Lock()

    def run(self, statement: str, timeout: float = 60.0) -> ResultSet:
        with self._lock:
            if _SHOW_TABLES_RE.match(statement):
                statement = "SELECT name FROM sqlite_master WHERE type='table' ORDER BY name"
            desc = _DESCRIBE_RE.match(statement)
            if desc:
                return self._describe(desc.group(1))
            interrupted = threading.Event()

            def interrupt() -> None:
                interrupted.set()
                self._conn.interrupt()

            timer = threading.Timer(timeout, interrupt)
            timer.start()
            try:
                cursor = self._conn.execute(statement)
                rows = cursor.fetchall() if cursor.description else []
                return ResultSet.from_rows(rows)
            except sqlite3.Warning as exc:
                return ResultSet.error(f"Error: {exc}")
            except sqlite3.Error as exc:
                if interrupted.is_set():
                    return ResultSet.error("Error: statement timed out", timed_out=True)
                return ResultSet.error(f"Error: {exc}")
            finally:
                timer.cancel()

    def _describe(self, table: str) -> ResultSet:
        cursor = self._conn.execute(f"PRAGMA table_info({table})")
        info = cursor.fetchall()
        if not info:
            return ResultSet.error(f"Error: Table '{table}' doesn't exist")
        rows = [
            (
                name,
                (col_type or "").lower(),
                "NO" if (notnull or pk) else "YES",
                "PRI" if pk else "",
                default,
                "",
            )
            for _cid, name, col_type, notnull, default, pk in info
        ]
        return ResultSet.from_rows(rows)

    def close(self) -> None:
        self._conn.close()


class MySqlExecutor(SqlExecutor):
    """Client for the containerized database over the standard driver."""

    def __init__(
        self,
        host: str,
        port: int,
        user: str = "root",
        password: str = "sandbox",
        database: str | None = None,
        ready_timeout: float = 120.0,
    ):
        try:
            import pymysql
        except ImportError as exc:  # pragma: no cover - optional extra
            raise InfrastructureError(
                "the mysql extra is required for the containerized database "
                "(pip install 'execgym[mysql]')"
            ) from exc
        self._pymysql = pymysql
        self._params = dict(host=host, port=port, user=user, password=password, database=database)
        self._conn = self._connect_with_retry(ready_timeout)
        self._lock = threading.Lock()

    def _connect_with_retry(self, ready_timeout: float):
        # the init dump loads asynchronously on container start; poll a
        # trivial query until the server answers
        deadline = time.monotonic() + ready_timeout
        last_error: Exception | None = None
        while time.monotonic() < deadline:
            try:
                conn = self._pymysql.connect(**self._params)
                conn.cursor().execute("SELECT 1")
                return conn
            except Exception as exc:
                last_error = exc
                time.sleep(1.0)
        raise InfrastructureError(f"database never became ready: {last_error}")

    def run(self, statement: str, timeout: float = 60.0) -> ResultSet:
        with self._lock:
            try:
                cursor = self._conn.cursor()
                cursor.execute(statement)
                rows = cursor.fetchall() if cursor.description else []
                return ResultSet.from_rows(list(rows))
            except self._pymysql.Error as exc:
                return ResultSet.error(f"Error: {exc.args[-1]}")

    def close(self) -> None:
        try:
            self._conn.close()
        except Exception:
            pass


def guard_read_only(golds: list[str]) -> list[str]:
    """Statements that would mutate state; non-empty means the dataset
    needs a reset script before it is safe without per-episode resets."""
    return [g for g in golds if MUTATING_KEYWORDS.search(g)]
