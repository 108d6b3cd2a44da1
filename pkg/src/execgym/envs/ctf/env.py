"""Capture-the-flag environment.

Per-task assets are staged into a shell sandbox; the action space is
open (bash, interpreter one-liners, tool runs all route through the
shell). The reward is exact flag match — 1 or 0, no partial credit.
Submitted flags are trimmed of surrounding whitespace before comparison;
nothing else is normalized.
"""

from __future__ import annotations

import logging
from typing import Any

from ...backend.base import ContainerBackend, ContainerHandle, ContainerSpec, ExecResult
from ...core.env import Environment
from ...core.truncate import truncate_observation
from ...core.types import ActionRecord, Observation, ScalarReward, TaskInstance
from ...errors import StagingError
from .bundle import CtfTask

logger = logging.getLogger(__name__)

STAGE_ROOT = "/ctf"


def ctf_reward(submitted: str, task: CtfTask) -> int:
    return 1 if submitted.strip() == task.flag else 0


def stage_assets(handle: ContainerHandle, task: CtfTask) -> None:
    """Copy the task's assets to their destinations with their modes.

    Refuses to write the flag in plaintext anywhere agent-readable unless
    the task explicitly requires it.
    """
    seen: set[str] = set()
    for asset in task.assets:
        if asset.dst in seen:
            raise StagingError(f"destination collision while staging: {asset.dst}")
        seen.add(asset.dst)
        if not asset.src.is_file():
            raise StagingError(f"asset missing: {asset.src}")
        data = asset.src.read_bytes()
        if task.flag.encode() in data and not task.flag_in_assets:
            raise StagingError(
                f"asset {asset.src.name} contains the flag in plaintext but the "
                "task does not declare flag_in_assets"
            )
        handle.put_file(asset.dst, data, mode=asset.mode)


class CtfEnvironment(Environment):
    name = "ctf"
    language = "bash"
    setting = "shell sandbox with staged puzzle assets"

    def __init__(
        self,
        dataset: Any,
        backend: ContainerBackend,
        bundles: dict[str, CtfTask],
        image: str = "execgym-ctf:latest",
        **kwargs: Any,
    ):
        from ...data.loader import instances_from

        super().__init__(instances_from(dataset), **kwargs)
        self.backend = backend
        self.bundles = bundles
        self.image = image
        self._handle: ContainerHandle | None = None

    # ------------------------------------------------------------------

    def on_reset(self, instance: TaskInstance) -> None:
        # fresh sandbox every episode: assets must not leak across tasks
        self._teardown()
        self._handle = self.backend.provision(
            ContainerSpec(image=self.image, entry_mode="shell", init_script=[f"mkdir -p .{STAGE_ROOT}"])
        )
        stage_assets(self._handle, self._task_of(instance))

    def execute_action(self, code: str) -> Observation:
        assert self._handle is not None
        result = self._handle.exec_action(code, timeout=self.exec_timeout)
        return self._observe(result)

    def compute_reward(self, submit: ActionRecord) -> tuple[float, ScalarReward]:
        assert self.task is not None
        value = float(ctf_reward(submit.payload, self._task_of(self.task)))
        return value, ScalarReward(total=value)

    def on_close(self) -> None:
        self._teardown()

    def sandbox_handle(self) -> ContainerHandle | None:
        return self._handle

    def gold_actions(self, instance: TaskInstance) -> list[str]:
        # the reference answer is the flag itself; replaying it is a submit
        return [f"submit {instance.gold.strip()}"]

    def config_snapshot(self, instance: TaskInstance) -> dict[str, Any]:
        snapshot = super().config_snapshot(instance)
        snapshot.update({"image": self.image, "backend": self.backend.name})
        return snapshot

    # ------------------------------------------------------------------

    def _observe(self, result: ExecResult) -> Observation:
        if result.timed_out:
            error_class = "timeout"
        elif result.exit_status != 0:
            error_class = "exec_error"
        else:
            error_class = "none"
        return truncate_observation(
            result.text,
            cap=self.token_cap,
            exit_status=result.exit_status,
            error_class=error_class,
        )

    def _task_of(self, instance: TaskInstance) -> CtfTask:
        task_id = str(instance.extras.get("task_id", instance.id))
        if task_id not in self.bundles:
            raise StagingError(f"no bundle for task {task_id!r}")
        return self.bundles[task_id]

    def _teardown(self) -> None:
        if self._handle is not None:
            self._handle.close()
            self._handle = None
