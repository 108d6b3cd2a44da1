"""Policies: things that turn chat messages into the next raw emission.

A policy is a callable ``messages -> text``; the strategy machinery owns
message construction and output parsing, so scripted policies, the chat
model client, and the human loop all plug in the same way.
"""

from __future__ import annotations

from typing import Callable, Protocol

from ..core.env import Environment
from ..core.types import TaskInstance
from ..errors import EpisodeAbort

Messages = list[dict[str, str]]


class Policy(Protocol):
    def __call__(self, messages: Messages) -> str: ...


class ScriptedPolicy:
    """Replays a fixed list of emissions; useful for tests and oracles."""

    def __init__(self, outputs: list[str], on_exhausted: str = "raise"):
        self.outputs = list(outputs)
        self.on_exhausted = on_exhausted
        self.calls = 0

    def __call__(self, messages: Messages) -> str:
        self.calls += 1
        if self.outputs:
            return self.outputs.pop(0)
        if self.on_exhausted == "raise":
            raise EpisodeAbort("scripted policy exhausted")
        return self.on_exhausted

    @property
    def invocations(self) -> int:
        return self.calls


def oracle_script(env: Environment, instance: TaskInstance, kind: str) -> list[str]:
    """Gold replay phrased in a strategy's protocol.

    The oracle speaks each protocol natively: fenced blocks for the
    code-only strategies, Thought/Action lines for the interleaved one,
    a numbered plan plus fenced steps for the plan-first one.
    """
    lines = env.gold_actions(instance)
    fence = env.language
    if kind in ("single_turn",):
        return ["```%s\n%s\n```" % (fence, "\n".join(lines))]
    if kind in ("try_again",):
        return ["```%s\n%s\n```" % (fence, line) for line in lines] + ["submit"]
    if kind == "react":
        out = []
        for i, line in enumerate(lines, start=1):
            out.append(f"Thought {i}: Replaying the reference procedure.\nAction {i}: execute[{line}]")
        last = lines[-1] if lines else ""
        if last.strip().lower().startswith("submit"):
            # the reference already ends in a submission (flag tasks)
            out[-1] = f"Thought {len(lines)}: Submitting the reference answer.\nAction {len(lines)}: {last.strip()}"
        else:
            out.append(f"Thought {len(lines) + 1}: The previous observation is the answer.\nAction {len(lines) + 1}: submit")
        return out
    if kind in ("plan_solve", "plan_solve_refine"):
        plan = "\n".join(f"{i}. Run step {i} of the reference procedure." for i in range(1, len(lines) + 1))
        return [f"Plan:\n{plan}"] + ["```%s\n%s\n```" % (fence, line) for line in lines]
    raise ValueError(f"the oracle does not speak strategy {kind!r}")


def oracle_policy_factory(kind: str) -> Callable[[Environment, TaskInstance], ScriptedPolicy]:
    def build(env: Environment, instance: TaskInstance) -> ScriptedPolicy:
        return ScriptedPolicy(oracle_script(env, instance, kind))

    return build
