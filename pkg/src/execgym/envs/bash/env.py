"""Shell environment over an OS file-system task setting.

Agent actions run in a stateful sandbox shell; scoring compares the
latest execution output and the watched tree's change set against a twin
sandbox on which the reference commands were executed. The twin is
provisioned from the same spec and receives the same per-instance
preprocessing — the agent's sandbox can be arbitrarily corrupted by then,
so the reference never runs there.
"""

from __future__ import annotations

import logging
from typing import Any, Callable

from ...backend.base import ContainerBackend, ContainerHandle, ContainerSpec, ExecResult
from ...core.env import Environment
from ...core.truncate import truncate_observation
from ...core.types import ActionRecord, Observation, TaskInstance
from ...errors import EvaluationError, InfrastructureError
from .fschanges import FsChange, GitWatch
from .reward import BashRewardBreakdown, score_bash

logger = logging.getLogger(__name__)

DEFAULT_FS_IMAGES = {
    1: "execgym-bash:fs1",
    2: "execgym-bash:fs2",
    3: "execgym-bash:fs3",
}
DEFAULT_WATCHED_ROOTS = {
    1: "/testbed",
    2: "/system",
    3: "/workspace",
}


class BashEnvironment(Environment):
    name = "bash"
    language = "bash"
    setting = "bash shell over an Ubuntu-style file system"

    def __init__(
        self,
        dataset: Any,
        backend: ContainerBackend,
        fs_images: dict[int, str] | None = None,
        watched_roots: dict[int, str] | None = None,
        **kwargs: Any,
    ):
        from ...data.loader import instances_from

        super().__init__(instances_from(dataset), **kwargs)
        self.backend = backend
        self.fs_images = fs_images or dict(DEFAULT_FS_IMAGES)
        self.watched_roots = watched_roots or dict(DEFAULT_WATCHED_ROOTS)
        self._handle: ContainerHandle | None = None
        self._current_fs: int | None = None
        self._watch: GitWatch | None = None
        self._baseline: dict[str, str] = {}
        self._gold_cache: tuple[str, list[FsChange], ContainerHandle] | None = None

    # ------------------------------------------------------------------
    # environment hooks
    # ------------------------------------------------------------------

    def on_reset(self, instance: TaskInstance) -> None:
        self._drop_gold_cache()
        fs = self._fs_of(instance)
        if self._handle is None or fs != self._current_fs:
            self._teardown_agent()
            self._handle, self._watch = self._provision(fs)
            self._current_fs = fs
        else:
            assert self._watch is not None
            self._handle.snapshot_reset(
                self._watch.reset_commands,
                cwd=self._watch.root,
                verify_command=self._watch.status_command,
            )
            self._handle.reset_shell_state()
        self._baseline = self._watch.baseline_hashes(self._handle)

    def execute_action(self, code: str) -> Observation:
        assert self._handle is not None
        result = self._handle.exec_action(code, timeout=self.exec_timeout)
        return self._observe(result)

    def compute_reward(self, submit: ActionRecord) -> tuple[float, BashRewardBreakdown]:
        assert self._handle is not None and self._watch is not None
        gold_out, gold_fs, twin = self._gold_side()
        agent_out = self.last_observation_text()
        agent_fs = self._watch.detect_changes(self._handle, self._baseline)
        breakdown = score_bash(
            agent_out,
            gold_out,
            agent_fs,
            gold_fs,
            agent_hash=_safe_hasher(self._handle),
            gold_hash=_safe_hasher(twin),
        )
        return breakdown.total, breakdown

    def interim_reward(self) -> float | None:
        return self.compute_reward(ActionRecord(kind="submit"))[0]

    def on_close(self) -> None:
        self._drop_gold_cache()
        self._teardown_agent()

    def sandbox_handle(self) -> ContainerHandle | None:
        return self._handle

    def reset_episode_state(self) -> None:
        """Restore the watched tree; the change listing is empty afterwards."""
        assert self._handle is not None and self._watch is not None
        self._handle.snapshot_reset(
            self._watch.reset_commands,
            cwd=self._watch.root,
            verify_command=self._watch.status_command,
        )

    def config_snapshot(self, instance: TaskInstance) -> dict[str, Any]:
        snapshot = super().config_snapshot(instance)
        fs = self._fs_of(instance)
        snapshot.update(
            {
                "image": self.fs_images[fs],
                "filesystem_id": fs,
                "watched_root": self.watched_roots[fs],
                "backend": self.backend.name,
            }
        )
        return snapshot

    # ------------------------------------------------------------------
    # gold side (twin sandbox)
    # ------------------------------------------------------------------

    def _gold_side(self) -> tuple[str, list[FsChange], ContainerHandle]:
        """Reference output and change set, computed once per episode."""
        if self._gold_cache is not None:
            return self._gold_cache
        assert self.task is not None
        fs = self._fs_of(self.task)
        try:
            twin, twin_watch = self._provision(fs)
        except InfrastructureError as exc:
            raise EvaluationError(f"twin provisioning failed: {exc}") from exc
        try:
            if self.preprocess is not None:
                self.preprocess(self.task, twin)
            twin_baseline = twin_watch.baseline_hashes(twin)
            gold_out = ""
            for command in self.gold_actions(self.task):
                result = twin.exec_action(command, timeout=self.exec_timeout)
                if result.timed_out:
                    raise EvaluationError(
                        f"gold command timed out on the twin: {command!r}"
                    )
                gold_out = self._observe(result).text
            gold_fs = twin_watch.detect_changes(twin, twin_baseline)
        except EvaluationError:
            twin.close()
            raise
        except Exception as exc:
            twin.close()
            raise EvaluationError(f"gold execution failed on the twin: {exc}") from exc
        self._gold_cache = (gold_out, gold_fs, twin)
        return self._gold_cache

    # ------------------------------------------------------------------
    # internals
    # ------------------------------------------------------------------

    def _provision(self, fs: int) -> tuple[ContainerHandle, GitWatch]:
        spec = ContainerSpec(image=self.fs_images[fs], entry_mode="shell")
        handle = self.backend.provision(spec)
        root = self.watched_roots[fs]
        watch = GitWatch(root, git_dir=handle.scratch_path("scm" + root.replace("/", "_")))
        try:
            watch.install(handle)
        except Exception:
            handle.close()
            raise
        return handle, watch

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

    def _fs_of(self, instance: TaskInstance) -> int:
        fs = int(instance.extras.get("fs", 1))
        if fs not in self.fs_images:
            raise EvaluationError(f"task {instance.id} names unknown file system {fs}")
        return fs

    def _teardown_agent(self) -> None:
        if self._handle is not None:
            self._handle.close()
            self._handle = None
            self._current_fs = None
            self._watch = None

    def _drop_gold_cache(self) -> None:
        if self._gold_cache is not None:
            self._gold_cache[2].close()
            self._gold_cache = None


def _safe_hasher(handle: ContainerHandle) -> Callable[[str], str | None]:
    def lookup(path: str) -> str | None:
        try:
            return handle.hash_file(path)
        except IsADirectoryError:
            return None

    return lookup
