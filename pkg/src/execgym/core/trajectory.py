"""Episode trajectory persistence.

One JSON document per episode, written atomically so concurrent episodes
(distinct files) never interleave. The document layout is part of the
external interface and is consumed by the report command and by replay
tooling:

    {task_id, env, query, gold,
     turns: [{i, action_kind, action, observation, admissible,
              exit_status, error_class}],
     reward, reward_breakdown, terminated_by, config_snapshot}

File name: ``<env>_<task_id>_<timestamp>.json``.
"""

from __future__ import annotations

import json
import os
import re
import time
from pathlib import Path
from typing import Any

from .types import ActionRecord, EpisodeTrajectory, Observation, TaskInstance

_UNSAFE = re.compile(r"[^A-Za-z0-9._-]+")


def _safe(fragment: str) -> str:
    return _UNSAFE.sub("-", fragment) or "task"


def trajectory_to_dict(traj: EpisodeTrajectory) -> dict[str, Any]:
    turns = []
    for action, obs in traj.turns:
        turns.append(
            {
                "i": action.turn_index,
                "action_kind": action.kind,
                "action": action.payload,
                "observation": obs.text,
                "admissible": action.admissible,
                "exit_status": obs.exit_status,
                "error_class": obs.error_class,
            }
        )
    breakdown = traj.reward_breakdown.as_dict() if traj.reward_breakdown else None
    return {
        "task_id": traj.task.id,
        "env": traj.env_name,
        "query": traj.task.query,
        "gold": traj.task.gold,
        "turns": turns,
        "reward": traj.reward,
        "reward_breakdown": breakdown,
        "terminated_by": traj.terminated_by,
        "config_snapshot": traj.config_snapshot,
    }


def save_trajectory(traj: EpisodeTrajectory, traj_dir: str | Path) -> Path:
    """Write the episode document; returns the path written."""
    directory = Path(traj_dir)
    directory.mkdir(parents=True, exist_ok=True)
    stamp = time.strftime("%Y%m%dT%H%M%S", time.gmtime())
    # microseconds + pid keep concurrent writers on distinct files
    stamp = f"{stamp}.{int((time.time() % 1) * 1e6):06d}.{os.getpid()}"
    name = f"{_safe(traj.env_name)}_{_safe(traj.task.id)}_{stamp}.json"
    path = directory / name
    tmp = path.with_suffix(".json.tmp")
    tmp.write_text(json.dumps(trajectory_to_dict(traj), indent=2, sort_keys=True))
    tmp.rename(path)
    return path


def load_trajectory(path: str | Path) -> EpisodeTrajectory:
    """Reconstruct an EpisodeTrajectory from a saved document.

    The per-turn truncation flag is not persisted, so it is not restored;
    everything the report and replay paths need survives the round trip.
    """
    doc = json.loads(Path(path).read_text())
    extras = doc.get("config_snapshot", {}).get("task_extras", {})
    task = TaskInstance(
        id=str(doc["task_id"]),
        query=doc["query"],
        gold=doc["gold"],
        extras=extras if isinstance(extras, dict) else {},
    )
    turns: list[tuple[ActionRecord, Observation]] = []
    for turn in doc["turns"]:
        action = ActionRecord(
            kind=turn["action_kind"],
            payload=turn["action"],
            turn_index=turn["i"],
            admissible=bool(turn["admissible"]),
        )
        obs = Observation(
            text=turn["observation"],
            exit_status=turn["exit_status"],
            error_class=turn["error_class"],
        )
        turns.append((action, obs))
    return EpisodeTrajectory(
        task=task,
        env_name=doc["env"],
        turns=turns,
        reward=doc["reward"],
        terminated_by=doc["terminated_by"],
        config_snapshot=doc.get("config_snapshot", {}),
    )
