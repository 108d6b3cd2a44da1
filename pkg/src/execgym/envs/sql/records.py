"""Result-set parsing and cell canonicalization.

Driver values are normalized into canonical scalars (null, arbitrary
precision integer, trimmed decimal, NFC text, hex-rendered bytes) so that
record equality is exact and type-aware: 29 equals a DECIMAL 29.0, but
never the text "29". Cell order within a record is significant — no
re-ordering ever happens here.
"""

from __future__ import annotations

import datetime as dt
import unicodedata
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from typing import Any, Sequence

Record = tuple  # tuple of canonical scalars


def canonical_cell(value: Any) -> Any:
    if value is None:
        return None
    if isinstance(value, bool):
        return int(value)
    if isinstance(value, int):
        return value
    if isinstance(value, float):
        if value != value or value in (float("inf"), float("-inf")):
            return str(value)
        return _trim(Decimal(repr(value)))
    if isinstance(value, Decimal):
        if not value.is_finite():
            return str(value)
        return _trim(value)
    if isinstance(value, str):
        return unicodedata.normalize("NFC", value)
    if isinstance(value, (bytes, bytearray, memoryview)):
        return "0x" + bytes(value).hex()
    if isinstance(value, (dt.datetime, dt.date, dt.time)):
        return value.isoformat(sep=" ") if isinstance(value, dt.datetime) else value.isoformat()
    if isinstance(value, dt.timedelta):
        return str(value)
    return unicodedata.normalize("NFC", str(value))


def _trim(value: Decimal) -> Decimal:
    """Trailing-zero trimming that never switches to exponent notation."""
    try:
        if value == value.to_integral_value():
            return value.quantize(Decimal(1))
    except InvalidOperation:
        return value
    return value.normalize()


def canonical_record(row: Sequence[Any]) -> Record:
    return tuple(canonical_cell(cell) for cell in row)


@dataclass
class ResultSet:
    """Outcome of one statement: ordered records, or an error message.

    ``is_tabular`` and ``error_text`` are mutually exclusive; statements
    that produce no result rows (rare in read-only tasks) are tabular and
    empty.
    """

    rows: list[Record] = field(default_factory=list)
    is_tabular: bool = True
    error_text: str | None = None
    timed_out: bool = False

    def __post_init__(self) -> None:
        if self.is_tabular == (self.error_text is not None):
            raise ValueError("exactly one of rows/error_text applies to a ResultSet")

    @classmethod
    def error(cls, message: str, timed_out: bool = False) -> "ResultSet":
        return cls(rows=[], is_tabular=False, error_text=message, timed_out=timed_out)

    @classmethod
    def from_rows(cls, raw_rows: Sequence[Sequence[Any]]) -> "ResultSet":
        return cls(rows=[canonical_record(r) for r in raw_rows])

    def render(self) -> str:
        """Observation text: a tuple-per-record listing, or the error."""
        if not self.is_tabular:
            return self.error_text or "error"
        return render_rows(self.rows)


def render_rows(rows: Sequence[Record]) -> str:
    return "[" + ", ".join(_render_record(r) for r in rows) + "]"


def _render_record(record: Record) -> str:
    inner = ", ".join(_render_cell(c) for c in record)
    if len(record) == 1:
        inner += ","
    return f"({inner})"


def _render_cell(cell: Any) -> str:
    if isinstance(cell, Decimal):
        return str(cell)
    return repr(cell)
