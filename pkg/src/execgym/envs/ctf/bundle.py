"""Capture-the-flag task bundles.

On-disk layout, one directory per task:

    tasks/<id>/task.json      {instruction, flag, assets: [{src, dst, mode?}],
                               flag_in_assets?: bool}
    tasks/<id>/assets/*       files referenced by src (relative to the bundle)

``flag_in_assets`` must be set when the task's design requires the flag
(or an encoding of it that contains it verbatim) inside an asset; staging
refuses to place the flag in agent-readable locations otherwise.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

from ...core.types import TaskInstance
from ...errors import StagingError

DEFAULT_FLAG_PATTERN = re.compile(r"^flag\{[^}]+\}$")


@dataclass
class CtfAsset:
    src: Path
    dst: str
    mode: int = 0o644


@dataclass
class CtfTask:
    task_id: str
    instruction: str
    flag: str
    assets: list[CtfAsset] = field(default_factory=list)
    flag_in_assets: bool = False

    def validate(self, flag_pattern: re.Pattern[str] = DEFAULT_FLAG_PATTERN) -> list[str]:
        problems = []
        if not flag_pattern.match(self.flag):
            problems.append(f"flag does not match the configured pattern: {self.flag!r}")
        for asset in self.assets:
            if not asset.src.is_file():
                problems.append(f"asset missing from bundle: {asset.src}")
        dests = [a.dst for a in self.assets]
        for dst in {d for d in dests if dests.count(d) > 1}:
            problems.append(f"two assets share the destination {dst}")
        return problems


def load_bundle(bundle_dir: str | Path) -> CtfTask:
    bundle_dir = Path(bundle_dir)
    doc = json.loads((bundle_dir / "task.json").read_text())
    assets = [
        CtfAsset(
            src=bundle_dir / entry["src"],
            dst=entry["dst"],
            mode=int(entry.get("mode", "644"), 8),
        )
        for entry in doc.get("assets", [])
    ]
    task = CtfTask(
        task_id=bundle_dir.name,
        instruction=doc["instruction"],
        flag=str(doc["flag"]).strip(),
        assets=assets,
        flag_in_assets=bool(doc.get("flag_in_assets", False)),
    )
    problems = task.validate()
    if problems:
        raise StagingError(f"bundle {task.task_id}: " + "; ".join(problems))
    return task


def load_bundles(tasks_dir: str | Path) -> tuple[dict[str, CtfTask], list[TaskInstance]]:
    """All bundles under a tasks directory, as env-ready instances.

    The hidden flag rides in the instance's gold field (it is the
    reference answer); instructions are the queries.
    """
    tasks_dir = Path(tasks_dir)
    bundles: dict[str, CtfTask] = {}
    instances: list[TaskInstance] = []
    for entry in sorted(tasks_dir.iterdir()):
        if not (entry / "task.json").is_file():
            continue
        task = load_bundle(entry)
        bundles[task.task_id] = task
        instances.append(
            TaskInstance(
                id=task.task_id,
                query=task.instruction,
                gold=task.flag,
                extras={"task_id": task.task_id},
            )
        )
    if not instances:
        raise StagingError(f"no task bundles found under {tasks_dir}")
    return bundles, instances
