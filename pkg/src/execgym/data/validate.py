"""Gold-replay validation: feed each task's reference procedure through
the environment as a dummy agent and demand a reward of exactly 1 with
every action admissible.

This is the standing health check for a dataset + environment + reward
triple: it catches broken gold commands, state leaking across episodes,
and reward functions that cannot reach 1.
"""

from __future__ import annotations

import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

from ..core.env import Environment
from ..core.types import TaskInstance
from ..errors import ExecGymError

EnvFactory = Callable[[], Environment]


@dataclass
class GoldEntry:
    task_id: str
    admissible: bool
    reward: float | None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None and self.admissible and self.reward == 1.0


@dataclass
class GoldReport:
    entries: list[GoldEntry] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return bool(self.entries) and all(e.ok for e in self.entries)

    def failures(self) -> list[GoldEntry]:
        return [e for e in self.entries if not e.ok]

    def render(self) -> str:
        lines = []
        for e in self.entries:
            status = "ok" if e.ok else "FAIL"
            detail = e.error or f"admissible={e.admissible} reward={e.reward}"
            lines.append(f"{status:4} {e.task_id}: {detail}")
        verdict = "PASS" if self.passed else "FAIL"
        lines.append(f"{verdict}: {sum(e.ok for e in self.entries)}/{len(self.entries)} instances at reward 1")
        return "\n".join(lines)


def validate_gold(
    env_factory: EnvFactory,
    instances: Sequence[TaskInstance],
    max_workers: int = 1,
) -> GoldReport:
    """Replay gold turn-wise then submit, for every instance.

    Infrastructure failures are recorded per instance (``error`` set),
    distinguished from reward failures (``reward`` != 1). With
    ``max_workers`` > 1, instances fan out across parallel environments,
    one sandbox set per worker.
    """
    if not instances:
        raise ValueError("validate_gold requires a non-empty dataset")
    indices = list(range(len(instances)))
    results: dict[int, GoldEntry] = {}
    lock = threading.Lock()

    def worker(assigned: list[int]) -> None:
        env = env_factory()
        try:
            for index in assigned:
                entry = _replay_one(env, instances[index], index)
                with lock:
                    results[index] = entry
        finally:
            env.close()

    if max_workers <= 1:
        worker(indices)
    else:
        chunks: list[list[int]] = [indices[i::max_workers] for i in range(max_workers)]
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            for future in [pool.submit(worker, chunk) for chunk in chunks if chunk]:
                future.result()
    return GoldReport(entries=[results[i] for i in indices])


def _replay_one(env: Environment, instance: TaskInstance, index: int) -> GoldEntry:
    try:
        env.reset(index)
        all_admissible = True
        outcome = None
        for command in env.gold_actions(instance):
            outcome = env.step(command)
            all_admissible = all_admissible and outcome.info.get("admissible", False)
        if outcome is None or not outcome.done:
            # gold sequences normally end without a submit; issue one
            outcome = env.step("submit")
        return GoldEntry(task_id=instance.id, admissible=all_admissible, reward=outcome.reward)
    except ExecGymError as exc:
        env.abort()
        return GoldEntry(task_id=instance.id, admissible=False, reward=None, error=str(exc))
