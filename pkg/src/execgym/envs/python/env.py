"""Interpreter-REPL environment.

Actions are interpreter statements evaluated in a persistent session
(definitions carry across turns, expression values echo back). Scoring
runs the submitted function against the task's unit tests, each in a
fresh namespace seeded with the submission; the reward is the fraction
of tests passed.
"""

from __future__ import annotations

import ast
import logging
from dataclasses import dataclass
from typing import Any, Callable

from ...core.env import Environment
from ...core.truncate import truncate_observation
from ...core.types import ActionRecord, Observation, RewardBreakdown, TaskInstance
from ...errors import DatasetValidationError
from .session import InterpreterSession, SessionCrash

logger = logging.getLogger(__name__)

TEST_TIMEOUT = 10.0

RESTART_NOTICE = "[interpreter session restarted; prior definitions were lost]"


@dataclass
class UnitTestSpec:
    tests: list[str]
    entry_point: str

    @classmethod
    def from_instance(cls, instance: TaskInstance) -> "UnitTestSpec":
        return cls(
            tests=list(instance.extras.get("tests", [])),
            entry_point=str(instance.extras.get("entry_point", "")),
        )

    def problems(self) -> list[str]:
        out = []
        if not self.tests:
            out.append("extras.tests is missing or empty")
        if not self.entry_point:
            out.append("extras.entry_point is missing")
        elif self.tests and not any(self.entry_point in t for t in self.tests):
            out.append("no test references extras.entry_point")
        return out


@dataclass
class PyRewardBreakdown(RewardBreakdown):
    passed: int
    total: int  # number of unit tests
    ratio: float

    def as_dict(self) -> dict[str, float]:
        return {"passed": self.passed, "total": self.total, "ratio": self.ratio}


class PythonEnvironment(Environment):
    name = "python"
    language = "python"
    setting = "interactive interpreter session"

    def __init__(self, dataset: Any, session_factory: Callable[[], InterpreterSession], **kwargs: Any):
        from ...data.loader import instances_from

        super().__init__(instances_from(dataset), **kwargs)
        problems: list[tuple[int, str]] = []
        for i, instance in enumerate(self.instances):
            for msg in UnitTestSpec.from_instance(instance).problems():
                problems.append((i, msg))
        if problems:
            raise DatasetValidationError(problems)
        self._session_factory = session_factory
        self._session: InterpreterSession | None = None

    # ------------------------------------------------------------------

    def on_reset(self, instance: TaskInstance) -> None:
        if self._session is None:
            self._session = self._session_factory()
        try:
            self._session.request("reset")
        except SessionCrash:
            self._session.request("reset")

    def execute_action(self, code: str) -> Observation:
        assert self._session is not None
        try:
            response = self._session.request("exec", code, timeout=self.exec_timeout)
        except SessionCrash:
            self.push_info(session_restarted=True)
            return Observation(text=RESTART_NOTICE, error_class="exec_error")
        text = response.get("output", "")
        if response.get("error"):
            text = text + ("\n" if text and not text.endswith("\n") else "") + response["error"]
        return truncate_observation(
            text, cap=self.token_cap, error_class=response.get("error_class", "none")
        )

    def compute_reward(self, submit: ActionRecord) -> tuple[float, PyRewardBreakdown]:
        assert self.task is not None
        spec = UnitTestSpec.from_instance(self.task)
        submission = submit.payload.strip() or self._latest_definition(spec.entry_point)
        breakdown = self._run_tests(submission, spec)
        return breakdown.ratio, breakdown

    def on_close(self) -> None:
        if self._session is not None:
            self._session.close()
            self._session = None

    def sandbox_handle(self) -> Any:
        return self._session

    def gold_actions(self, instance: TaskInstance) -> list[str]:
        # gold is a code block (multi-line definition): one interpreter action
        return [instance.gold]

    # ------------------------------------------------------------------

    def _run_tests(self, submission: str, spec: UnitTestSpec) -> PyRewardBreakdown:
        total = len(spec.tests)
        if not submission or not _parses(submission):
            return PyRewardBreakdown(passed=0, total=total, ratio=0.0)
        assert self._session is not None
        passed = 0
        for test in spec.tests:
            try:
                self._session.request("reset")
                seeded = self._session.request("exec", submission, timeout=TEST_TIMEOUT)
                if not seeded.get("ok"):
                    continue
                result = self._session.request("exec", test, timeout=TEST_TIMEOUT)
            except SessionCrash:
                continue  # a wedged test counts as failed; session is fresh again
            if result.get("ok"):
                passed += 1
        try:
            self._session.request("reset")
        except SessionCrash:
            pass
        return PyRewardBreakdown(passed=passed, total=total, ratio=passed / total if total else 0.0)

    def _latest_definition(self, entry_point: str) -> str:
        """Most recent session action that defines the entry point."""
        episode = self.trajectory
        if episode is None:
            return ""
        for action, _obs in reversed(episode.turns):
            if action.is_submit:
                continue
            if _defines(action.payload, entry_point):
                return action.payload
        return ""


def _parses(code: str) -> bool:
    try:
        ast.parse(code)
        return True
    except SyntaxError:
        return False


def _defines(code: str, entry_point: str) -> bool:
    try:
        tree = ast.parse(code)
    except SyntaxError:
        return False
    return any(
        isinstance(node, (ast.FunctionDef, ast.AsyncFunctionDef)) and node.name == entry_point
        for node in ast.walk(tree)
    )
