"""Shared vocabulary for episodes: tasks, actions, observations, trajectories.

These types are the currency between datasets, environments, the harness,
and the session service. They are deliberately plain dataclasses; anything
that crosses a process boundary has an explicit ``to_dict`` form.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Any, Literal

ActionKind = Literal["code", "submit"]
ErrorClass = Literal["none", "exec_error", "timeout", "protocol_error"]
TerminatedBy = Literal["submit", "max_turns", "abort"]

_SUBMIT_RE = re.compile(r"^\s*submit\b[ \t]*(.*)$", re.DOTALL)


@dataclass
class TaskInstance:
    """One (query, gold, extras) record drawn from a dataset.

    ``query`` is the natural-language instruction shown to the agent;
    ``gold`` is the reference procedure (or reference answer) whose
    execution defines success. ``extras`` carries environment-specific
    hints (fixture file system id, unit tests, database name, hardness
    label, hidden flag, ...).
    """

    id: str
    query: str
    gold: str
    extras: dict[str, Any] = field(default_factory=dict)

    def validate(self) -> list[str]:
        problems = []
        if not self.query or not self.query.strip():
            problems.append("query is empty")
        if not self.gold or not str(self.gold).strip():
            problems.append("gold is empty")
        return problems


@dataclass
class ActionRecord:
    """One turn's action: code to execute, or the submit keyword.

    ``payload`` is the code text (empty for a bare submit; a submit may
    carry a payload, e.g. a flag or an inline submission).
    ``admissible`` is filled in by the environment after execution.
    """

    kind: ActionKind
    payload: str = ""
    turn_index: int = 0
    admissible: bool = True
    latency: float = 0.0

    @property
    def is_submit(self) -> bool:
        return self.kind == "submit"


def parse_action(text: str) -> ActionRecord:
    """Split raw action text into (kind, payload).

    An action is a submit iff its first word is exactly ``submit``; the
    remainder, if any, is the submit payload. Everything else is code.
    """
    m = _SUBMIT_RE.match(text)
    if m:
        return ActionRecord(kind="submit", payload=m.group(1).strip())
    return ActionRecord(kind="code", payload=text)


@dataclass
class Observation:
    """Execution feedback for one action, possibly truncated.

    ``truncated`` is true iff the raw output exceeded the configured cap.
    ``exit_status`` is absent (None) where the notion does not apply
    (e.g. SQL statements). ``error_class`` distinguishes clean execution,
    execution errors, timeouts, and protocol-level failures.
    """

    text: str
    truncated: bool = False
    exit_status: int | None = None
    error_class: ErrorClass = "none"

    def to_dict(self) -> dict[str, Any]:
        return {
            "text": self.text,
            "truncated": self.truncated,
            "exit_status": self.exit_status,
            "error_class": self.error_class,
        }


class RewardBreakdown:
    """Base for per-environment component scores.

    Subclasses carry named components (their meaning is environment
    specific) and serialize via ``as_dict``; the scalar episode reward is
    returned alongside the breakdown, not read from it.
    """

    def as_dict(self) -> dict[str, float]:  # pragma: no cover - overridden
        raise NotImplementedError


@dataclass
class ScalarReward(RewardBreakdown):
    """Breakdown for environments whose reward has a single component."""

    total: float

    def as_dict(self) -> dict[str, float]:
        return {"total": self.total}


@dataclass
class EpisodeTrajectory:
    """Ordered turn log plus the final reward for one episode."""

    task: TaskInstance
    env_name: str
    turns: list[tuple[ActionRecord, Observation]] = field(default_factory=list)
    reward: float | None = None
    reward_breakdown: RewardBreakdown | None = None
    terminated_by: TerminatedBy | None = None
    wall_time: float = 0.0
    config_snapshot: dict[str, Any] = field(default_factory=dict)

    @property
    def done(self) -> bool:
        return self.terminated_by is not None

    def action_texts(self) -> list[str]:
        """Raw action texts in order, submit rendered back to keyword form."""
        out = []
        for action, _ in self.turns:
            if action.is_submit:
                out.append(f"submit {action.payload}".strip())
            else:
                out.append(action.payload)
        return out


@dataclass
class MetricsSummary:
    """Aggregate Success Rate / Error % / mean turns over many episodes."""

    success_rate: float
    error_pct: float
    mean_turns: float
    episode_count: int

    def as_dict(self) -> dict[str, float]:
        return {
            "success_rate": self.success_rate,
            "error_pct": self.error_pct,
            "mean_turns": self.mean_turns,
            "episode_count": self.episode_count,
        }
