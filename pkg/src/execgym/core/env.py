"""Episode engine: the reset/step/close contract every environment speaks.

An environment binds a dataset, a sandbox backend, and a reward function.
Subclasses implement the hooks (execute, score, state reset); the engine
owns lifecycle and bookkeeping — turn logging, admissibility, truncation,
reward emission (exactly once per episode, on submit or forced
termination), and trajectory persistence.
"""

from __future__ import annotations

import logging
import time
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Sequence

from ..errors import BoundsError, EpisodeAbort, LifecycleError
from .trajectory import save_trajectory
from .truncate import DEFAULT_TOKEN_CAP
from .types import (
    ActionRecord,
    EpisodeTrajectory,
    Observation,
    RewardBreakdown,
    TaskInstance,
    TerminatedBy,
    parse_action,
)

logger = logging.getLogger(__name__)

PreprocessHook = Callable[[TaskInstance, Any], None]


@dataclass
class StepOutcome:
    """What one step returns: feedback, optional reward, done flag, info."""

    observation: Observation
    reward: float | None
    done: bool
    info: dict[str, Any] = field(default_factory=dict)

    def __iter__(self):
        # allow gym-style tuple unpacking: obs, reward, done, info = env.step(a)
        return iter((self.observation, self.reward, self.done, self.info))


class Environment(ABC):
    """Single-session interactive environment over a sandboxed task setting.

    One episode at a time; calls on one instance must be externally
    serialized. Distinct instances (distinct sandboxes) are independent.
    """

    name: str = "abstract"
    language: str = "bash"
    setting: str = "sandboxed system"

    def __init__(
        self,
        instances: Sequence[TaskInstance],
        traj_dir: str | Path | None = None,
        preprocess: PreprocessHook | None = None,
        token_cap: int = DEFAULT_TOKEN_CAP,
        exec_timeout: float = 60.0,
    ):
        if not instances:
            raise ValueError("environment needs at least one task instance")
        self.instances = list(instances)
        self.traj_dir = Path(traj_dir) if traj_dir else None
        self.preprocess = preprocess
        self.token_cap = token_cap
        self.exec_timeout = exec_timeout
        self._cursor = 0
        self._episode: EpisodeTrajectory | None = None
        self._episode_start = 0.0
        self._closed = False
        self._pending_info: dict[str, Any] = {}
        self.task: TaskInstance | None = None

    # ------------------------------------------------------------------
    # lifecycle
    # ------------------------------------------------------------------

    def reset(self, index: int | None = None) -> tuple[Observation, TaskInstance]:
        """Start an episode; returns the task query as the first observation.

        Without an index, instances are served in sequential order
        (wrapping). A running episode is aborted and persisted first.
        """
        if self._closed:
            raise LifecycleError("environment is closed")
        if index is not None:
            if not (0 <= index < len(self.instances)):
                raise BoundsError(
                    f"index {index} out of range for dataset of {len(self.instances)}"
                )
            self._cursor = index
        self._abort_active()
        instance = self.instances[self._cursor]
        self._cursor = (self._cursor + 1) % len(self.instances)

        self.task = instance
        self._episode = EpisodeTrajectory(
            task=instance,
            env_name=self.name,
            config_snapshot=self.config_snapshot(instance),
        )
        self._episode_start = time.monotonic()
        logger.debug("[%s] episode start: task %s", self.name, instance.id)
        try:
            self.on_reset(instance)
        except Exception:
            # infrastructure trouble: the episode never started
            self._episode = None
            self.task = None
            raise
        if self.preprocess is not None:
            try:
                self.preprocess(instance, self.sandbox_handle())
            except Exception as exc:
                self._finalize(None, None, "abort")
                raise EpisodeAbort(
                    f"preprocess hook failed for task {instance.id}: {exc}"
                ) from exc
        return Observation(text=instance.query), instance

    def step(self, action: str | ActionRecord) -> StepOutcome:
        """Execute one action; on submit, score and persist the episode."""
        episode = self._require_active()
        record = parse_action(action) if isinstance(action, str) else action
        record.turn_index = len(episode.turns)
        started = time.monotonic()

        if record.is_submit:
            reward, breakdown = self.compute_reward(record)
            record.latency = time.monotonic() - started
            record.admissible = True
            obs = Observation(text="")
            episode.turns.append((record, obs))
            self._finalize(reward, breakdown, "submit")
            return StepOutcome(obs, reward, True, {"admissible": True})

        obs = self.execute_action(record.payload)
        record.latency = time.monotonic() - started
        record.admissible = self.action_admissible(record, obs)
        episode.turns.append((record, obs))
        info = {"admissible": record.admissible, "turn": record.turn_index}
        info.update(self._pending_info)
        self._pending_info = {}
        return StepOutcome(obs, None, False, info)

    def step_protocol_error(self, raw: str, reminder: str) -> StepOutcome:
        """Log an unparseable policy emission as a non-admissible turn.

        Nothing reaches the sandbox; the observation asks for the correct
        format. Counts as a turn for Error % purposes.
        """
        episode = self._require_active()
        record = ActionRecord(
            kind="code", payload=raw, turn_index=len(episode.turns), admissible=False
        )
        obs = Observation(text=reminder, error_class="protocol_error")
        episode.turns.append((record, obs))
        return StepOutcome(obs, None, False, {"admissible": False, "turn": record.turn_index})

    def finalize(self, terminated_by: TerminatedBy = "max_turns") -> StepOutcome:
        """Force-terminate, scoring as if submit were issued.

        Used at the turn cap (every episode yields a score) and by
        harness-side completion detection; no turn is logged.
        """
        if terminated_by not in ("max_turns", "submit"):
            raise ValueError("finalize scores episodes; use abort() for unscored ends")
        self._require_active()
        reward, breakdown = self.compute_reward(ActionRecord(kind="submit"))
        self._finalize(reward, breakdown, terminated_by)
        return StepOutcome(Observation(text=""), reward, True, {"admissible": True})

    def abort(self) -> None:
        """Terminate without scoring (policy failure, operator interrupt)."""
        if self._episode is not None and not self._episode.done:
            self._finalize(None, None, "abort")

    def close(self) -> None:
        """Release the sandbox. Idempotent; aborts a running episode."""
        if self._closed:
            return
        self._abort_active()
        self._closed = True
        try:
            self.on_close()
        except Exception as exc:  # infrastructure-level; handle is dead regardless
            logger.warning("[%s] close encountered backend trouble: %s", self.name, exc)

    @property
    def done(self) -> bool:
        return self._episode is None or self._episode.done

    @property
    def trajectory(self) -> EpisodeTrajectory | None:
        return self._episode

    def last_observation_text(self) -> str:
        """Latest execution output, '' before the first turn.

        Submit turns carry no execution output, so the latest code turn's
        observation is the scored one.
        """
        episode = self._episode
        if episode is None:
            return ""
        for action, obs in reversed(episode.turns):
            if not action.is_submit:
                return obs.text
        return ""

    # ------------------------------------------------------------------
    # hooks
    # ------------------------------------------------------------------

    @abstractmethod
    def execute_action(self, code: str) -> Observation:
        """Run agent code in the sandbox; returns a truncated observation."""

    @abstractmethod
    def compute_reward(self, submit: ActionRecord) -> tuple[float, RewardBreakdown]:
        """Score the episode state against the task's gold."""

    def on_reset(self, instance: TaskInstance) -> None:
        """Restore sandbox state for a fresh episode (provision, reset hooks)."""

    def on_close(self) -> None:
        """Tear down sandbox resources."""

    def sandbox_handle(self) -> Any:
        """The underlying container handle, for preprocess hooks."""
        return None

    def interim_reward(self) -> float | None:
        """Current as-if-submitted score, where the environment supports it."""
        return None

    def action_admissible(self, record: ActionRecord, obs: Observation) -> bool:
        """Default rule: executed without error."""
        return obs.error_class == "none" and obs.exit_status in (0, None)

    def push_info(self, **items: Any) -> None:
        """Attach extra keys to the current step's info (hook for subclasses)."""
        self._pending_info.update(items)

    def gold_actions(self, instance: TaskInstance) -> list[str]:
        """Gold as a turn-wise action sequence (no submit)."""
        return [line for line in instance.gold.splitlines() if line.strip()]

    def config_snapshot(self, instance: TaskInstance) -> dict[str, Any]:
        return {
            "env": self.name,
            "token_cap": self.token_cap,
            "exec_timeout": self.exec_timeout,
            "task_extras": dict(instance.extras),
        }

    # ------------------------------------------------------------------
    # internals
    # ------------------------------------------------------------------

    def _require_active(self) -> EpisodeTrajectory:
        if self._closed:
            raise LifecycleError("environment is closed")
        if self._episode is None:
            raise LifecycleError("no active episode: call reset() first")
        if self._episode.done:
            raise LifecycleError("episode is done: call reset() to start another")
        return self._episode

    def _abort_active(self) -> None:
        if self._episode is not None and not self._episode.done:
            self._finalize(None, None, "abort")

    def _finalize(
        self,
        reward: float | None,
        breakdown: RewardBreakdown | None,
        terminated_by: TerminatedBy,
    ) -> None:
        episode = self._episode
        assert episode is not None
        episode.reward = reward
        episode.reward_breakdown = breakdown
        episode.terminated_by = terminated_by
        episode.wall_time = time.monotonic() - self._episode_start
        if self.traj_dir is not None:
            path = save_trajectory(episode, self.traj_dir)
            logger.debug("[%s] trajectory saved: %s", self.name, path)
        logger.debug(
            "[%s] episode end: task %s, terminated_by=%s, reward=%s",
            self.name, episode.task.id, terminated_by, reward,
        )
