"""Dataset ingestion and validation.

A dataset is a list of records with at minimum a non-empty ``query`` and
``gold``. Two file formats are accepted: a JSON array and JSON lines.
Unknown record fields are preserved as instance extras (a nested
``extras`` object is merged in), so published task files load unmodified.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Sequence

from ..core.types import TaskInstance
from ..errors import DatasetFormatError, DatasetValidationError

RESERVED_FIELDS = ("id", "query", "gold")


@dataclass
class DatasetManifest:
    path: str
    format: str  # "json-array" | "json-lines"
    count: int
    extras_keys: set[str]


def load(path: str | Path) -> tuple[DatasetManifest, list[TaskInstance]]:
    """Materialize and validate a dataset file.

    All schema problems are aggregated into one error naming the offending
    record indices, so a single run reports everything.
    """
    path = Path(path)
    fmt, records = _read_records(path)
    instances: list[TaskInstance] = []
    problems: list[tuple[int, str]] = []
    seen_ids: dict[str, int] = {}
    for i, record in enumerate(records):
        if not isinstance(record, dict):
            problems.append((i, f"record is {type(record).__name__}, expected object"))
            continue
        extras = {k: v for k, v in record.items() if k not in RESERVED_FIELDS and k != "extras"}
        nested = record.get("extras")
        if isinstance(nested, dict):
            extras.update(nested)
        instance = TaskInstance(
            id=str(record["id"]) if "id" in record else str(i),
            query=str(record.get("query") or ""),
            gold=str(record.get("gold") or ""),
            extras=extras,
        )
        for msg in instance.validate():
            problems.append((i, msg))
        if instance.id in seen_ids:
            problems.append((i, f"duplicate id {instance.id!r} (first seen in record {seen_ids[instance.id]})"))
        seen_ids.setdefault(instance.id, i)
        instances.append(instance)
    if problems:
        raise DatasetValidationError(problems)
    manifest = DatasetManifest(
        path=str(path),
        format=fmt,
        count=len(instances),
        extras_keys=set().union(*(set(inst.extras) for inst in instances)) if instances else set(),
    )
    return manifest, instances


def write(instances: Sequence[TaskInstance], path: str | Path, format: str = "json-array") -> Path:
    """Serialize instances back to an accepted format (round-trip inverse of load)."""
    path = Path(path)
    docs = [_record_for(inst) for inst in instances]
    if format == "json-array":
        path.write_text(json.dumps(docs, indent=2))
    elif format == "json-lines":
        path.write_text("\n".join(json.dumps(d) for d in docs) + "\n")
    else:
        raise DatasetFormatError(f"unknown dataset format {format!r}")
    return path


def _record_for(inst: TaskInstance) -> dict[str, Any]:
    record = {"id": inst.id, "query": inst.query, "gold": inst.gold}
    record.update(inst.extras)
    return record


def _read_records(path: Path) -> tuple[str, list[Any]]:
    if not path.exists():
        raise DatasetFormatError(f"dataset file not found: {path}")
    text = path.read_text()
    stripped = text.lstrip()
    if not stripped:
        raise DatasetFormatError(f"dataset file is empty: {path}")
    if stripped.startswith("["):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise DatasetFormatError(f"invalid JSON array in {path}: {exc}") from exc
        if not isinstance(data, list):
            raise DatasetFormatError(f"top-level JSON value in {path} is not an array")
        return "json-array", data
    # fall back to JSON lines
    records = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            records.append(json.loads(line))
        except json.JSONDecodeError as exc:
            raise DatasetFormatError(
                f"{path} is neither a JSON array nor JSON lines (line {lineno}: {exc})"
            ) from exc
    return "json-lines", records


def instances_from(source: Any) -> list[TaskInstance]:
    """Normalize the ways callers hand datasets around.

    Accepts a path, a (manifest, instances) pair, or an iterable of
    TaskInstance.
    """
    if isinstance(source, (str, Path)):
        return load(source)[1]
    if isinstance(source, tuple) and len(source) == 2:
        return list(source[1])
    if isinstance(source, Iterable):
        items = list(source)
        if all(isinstance(x, TaskInstance) for x in items):
            return items
    raise TypeError(f"cannot interpret {type(source).__name__} as a dataset")
