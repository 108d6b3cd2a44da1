"""Interaction strategies: the state machines that drive an episode.

* single_turn — one emission, scored immediately.
* try_again — iterate with execution feedback (and a visible interim
  reward) until the reward reaches 1 or the turn budget runs out.
* react — interleaved Thought/Action turns; the agent decides when to
  submit; interim rewards are neither shown nor acted on.
* plan_solve — elicit a numbered plan, then execute it step by step;
  ends on submit or plan exhaustion.
* plan_solve_refine — plan_solve plus a short feedback loop (3 turns)
  when the executed plan did not reach reward 1.

Malformed policy output never crashes an episode: code-only strategies
take the whole emission as code; the interleaved protocol logs a
non-admissible format-reminder turn.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

from ..core.env import Environment, StepOutcome
from ..core.types import EpisodeTrajectory
from ..errors import EpisodeAbort
from .parsing import FORMAT_REMINDER, parse_code_block, parse_plan, parse_react
from .policy import Messages, Policy
from .templates import PromptTemplateSet, templates_for

logger = logging.getLogger(__name__)

STRATEGY_KINDS = ("single_turn", "try_again", "react", "plan_solve", "plan_solve_refine", "human")

REFINE_TURNS = 3


@dataclass
class StrategyConfig:
    kind: str
    max_turns: int = 10
    templates: PromptTemplateSet | None = None
    terminate_on_reward: bool | None = None

    def __post_init__(self) -> None:
        if self.kind not in STRATEGY_KINDS:
            raise ValueError(f"unknown strategy kind {self.kind!r}")
        if self.terminate_on_reward is None:
            self.terminate_on_reward = self.kind == "try_again"
        if self.kind == "single_turn":
            if self.max_turns != 1:
                raise ValueError("single_turn implies max_turns = 1")
        if self.kind == "try_again" and not self.terminate_on_reward:
            raise ValueError("try_again terminates on reward = 1 by definition")
        if self.kind in ("react", "plan_solve", "plan_solve_refine") and self.terminate_on_reward:
            raise ValueError(f"{self.kind} termination is decided by the agent, not the reward")
        if self.max_turns < 1:
            raise ValueError("max_turns must be >= 1")

    @classmethod
    def for_kind(cls, kind: str, max_turns: int | None = None) -> "StrategyConfig":
        if kind == "single_turn":
            return cls(kind=kind, max_turns=1)
        return cls(kind=kind, max_turns=max_turns or 10)


def run_episode(
    env: Environment,
    policy: Policy,
    strategy: StrategyConfig,
    index: int | None = None,
) -> EpisodeTrajectory:
    """Drive one episode to termination under a strategy.

    Always returns a terminated trajectory: submit, completion detection,
    turn-cap finalization (scored as if submitted), or abort on a hard
    policy failure.
    """
    if strategy.kind == "human":
        raise ValueError("use harness.human.human_repl for the interactive strategy")
    _obs, task = env.reset(index)
    templates = strategy.templates or templates_for(
        strategy.kind, env.language, env.setting, env_name=env.name
    )
    try:
        if strategy.kind in ("plan_solve", "plan_solve_refine"):
            _run_plan_solve(env, policy, strategy, templates)
        else:
            _run_code_loop(env, policy, strategy, templates)
    except EpisodeAbort as exc:
        logger.warning("episode aborted: %s", exc)
        env.abort()
    trajectory = env.trajectory
    assert trajectory is not None
    return trajectory


# ----------------------------------------------------------------------
# single_turn / try_again / react
# ----------------------------------------------------------------------


def _run_code_loop(
    env: Environment,
    policy: Policy,
    strategy: StrategyConfig,
    templates: PromptTemplateSet,
) -> None:
    assert env.task is not None
    messages: Messages = [
        {"role": "system", "content": templates.initial},
        {"role": "user", "content": templates.render(templates.instruction, query=env.task.query)},
    ]
    for _turn in range(strategy.max_turns):
        raw = policy(messages)
        messages.append({"role": "assistant", "content": raw})
        outcome = _apply_emission(env, strategy, raw)
        if outcome.done:
            return
        interim = env.interim_reward() if strategy.terminate_on_reward else None
        if interim == 1.0:
            env.finalize(terminated_by="submit")
            return
        messages.append(
            {"role": "user", "content": _observation_message(templates, outcome, interim)}
        )
    env.finalize(terminated_by="max_turns")


def _apply_emission(env: Environment, strategy: StrategyConfig, raw: str) -> StepOutcome:
    if strategy.kind == "react":
        turn = parse_react(raw)
        if turn.action is None:
            return env.step_protocol_error(raw, FORMAT_REMINDER)
        if turn.action == "submit":
            return env.step(f"submit {turn.payload}".strip())
        return env.step(turn.payload)
    code = parse_code_block(raw, env.language)
    return env.step(code)


def _observation_message(
    templates: PromptTemplateSet, outcome: StepOutcome, interim: float | None
) -> str:
    if "{reward}" in templates.observation:
        shown = "[0, 1]" if interim is None else f"{interim:.4g}"
        return templates.render(templates.observation, output=outcome.observation.text, reward=shown)
    return templates.render(templates.observation, output=outcome.observation.text)


# ----------------------------------------------------------------------
# plan & solve (+ refine)
# ----------------------------------------------------------------------


def _run_plan_solve(
    env: Environment,
    policy: Policy,
    strategy: StrategyConfig,
    templates: PromptTemplateSet,
) -> None:
    assert env.task is not None and templates.plan and templates.execute_plan
    plan_prompt = templates.render(templates.plan, query=env.task.query)
    messages: Messages = [
        {"role": "system", "content": templates.initial},
        {"role": "user", "content": plan_prompt},
    ]
    raw_plan = policy(messages)
    messages.append({"role": "assistant", "content": raw_plan})
    steps = parse_plan(raw_plan)
    if not steps:
        logger.warning("plan had no numbered items; falling back to feedback-loop semantics")
        fallback = StrategyConfig(kind="try_again", max_turns=strategy.max_turns)
        fallback_templates = templates_for("try_again", env.language, env.setting, env_name=env.name)
        _run_code_loop(env, policy, fallback, fallback_templates)
        return

    messages.append(
        {"role": "user", "content": templates.execute_plan + f"\n\nStep: {steps[0]}"}
    )
    taken = 0
    for step_index, _step in enumerate(steps):
        if taken >= strategy.max_turns:
            env.finalize(terminated_by="max_turns")
            return
        raw = policy(messages)
        taken += 1
        messages.append({"role": "assistant", "content": raw})
        code = parse_code_block(raw, env.language)
        outcome = env.step(code)
        if outcome.done:
            return
        if step_index + 1 < len(steps):
            messages.append(
                {
                    "role": "user",
                    "content": templates.render(
                        templates.observation_step,
                        output=outcome.observation.text,
                        step=steps[step_index + 1],
                    ),
                }
            )
    if strategy.kind == "plan_solve_refine" and templates.refine:
        reward = env.interim_reward()
        if reward != 1.0:
            _refine_loop(env, policy, strategy, templates, messages, taken)
            return
    env.finalize(terminated_by="max_turns")


def _refine_loop(
    env: Environment,
    policy: Policy,
    strategy: StrategyConfig,
    templates: PromptTemplateSet,
    messages: Messages,
    taken: int,
) -> None:
    messages.append({"role": "user", "content": templates.refine or ""})
    for _extra in range(REFINE_TURNS):
        if taken >= strategy.max_turns:
            break
        raw = policy(messages)
        taken += 1
        messages.append({"role": "assistant", "content": raw})
        code = parse_code_block(raw, env.language)
        outcome = env.step(code)
        if outcome.done:
            return
        if env.interim_reward() == 1.0:
            env.finalize(terminated_by="submit")
            return
        messages.append(
            {
                "role": "user",
                "content": templates.render(templates.observation, output=outcome.observation.text),
            }
        )
    env.finalize(terminated_by="max_turns")

