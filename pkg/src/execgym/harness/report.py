"""Reports over a directory of saved trajectories.

Overall and per-group Success Rate / Error % / mean turns, grouped by an
instance extras key (episodes without the key land in "ungrouped").
Unreadable files are skipped with a warning and counted in the footer.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from ..core.metrics import summarize
from ..core.trajectory import load_trajectory
from ..core.types import EpisodeTrajectory, MetricsSummary

logger = logging.getLogger(__name__)

UNGROUPED = "ungrouped"


@dataclass
class Report:
    overall: MetricsSummary
    groups: dict[str, MetricsSummary] = field(default_factory=dict)
    group_by: str | None = None
    skipped_files: int = 0

    def as_dict(self) -> dict[str, Any]:
        return {
            "overall": self.overall.as_dict(),
            "groups": {name: s.as_dict() for name, s in self.groups.items()},
            "group_by": self.group_by,
            "skipped_files": self.skipped_files,
        }

    def render(self) -> str:
        header = f"{'group':<16} {'episodes':>8} {'SR':>8} {'Error %':>8} {'turns':>7}"
        rows = [header, "-" * len(header)]

        def row(name: str, summary: MetricsSummary) -> str:
            return (
                f"{name:<16} {summary.episode_count:>8d} {summary.success_rate:>8.3f} "
                f"{summary.error_pct:>8.1f} {summary.mean_turns:>7.2f}"
            )

        for name in sorted(self.groups):
            rows.append(row(name, self.groups[name]))
        rows.append(row("all", self.overall))
        if self.skipped_files:
            rows.append(f"(skipped {self.skipped_files} unreadable trajectory files)")
        return "\n".join(rows)


def load_trajectories(traj_dir: str | Path) -> tuple[list[EpisodeTrajectory], int]:
    directory = Path(traj_dir)
    if not directory.is_dir():
        raise FileNotFoundError(f"trajectory directory not found: {directory}")
    trajectories: list[EpisodeTrajectory] = []
    skipped = 0
    for path in sorted(directory.glob("*.json")):
        try:
            trajectories.append(load_trajectory(path))
        except Exception as exc:
            skipped += 1
            logger.warning("skipping unreadable trajectory %s: %s", path.name, exc)
    return trajectories, skipped


def report(traj_dir: str | Path, group_by: str | None = None) -> Report:
    trajectories, skipped = load_trajectories(traj_dir)
    if not trajectories:
        raise ValueError(f"no readable trajectories in {traj_dir}")
    groups: dict[str, list[EpisodeTrajectory]] = {}
    if group_by:
        for traj in trajectories:
            key = str(traj.task.extras.get(group_by, UNGROUPED))
            groups.setdefault(key, []).append(traj)
    return Report(
        overall=summarize(trajectories),
        groups={name: summarize(members) for name, members in groups.items()},
        group_by=group_by,
        skipped_files=skipped,
    )
