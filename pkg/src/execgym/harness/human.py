"""Interactive play: a human drives the episode from the terminal.

The human decides when to submit (the episode never auto-terminates on
reward 1); a turn cap still applies, after which the episode is scored
as if submitted. Logging is identical to agent episodes, so human
trajectories land in the same files and reports.
"""

from __future__ import annotations

from typing import Callable

from ..core.env import Environment
from ..core.types import EpisodeTrajectory

HUMAN_MAX_TURNS = 10

_HELP = (
    "type a command to execute it; ':submit [payload]' to submit; "
    "':quit' to abort; ':help' to reprint this"
)


def human_repl(
    env: Environment,
    index: int | None = None,
    max_turns: int = HUMAN_MAX_TURNS,
    input_fn: Callable[[str], str] = input,
    print_fn: Callable[[str], None] = print,
) -> EpisodeTrajectory:
    obs, task = env.reset(index)
    print_fn(f"[task {task.id}] {obs.text}")
    print_fn(f"({_HELP})")
    turns = 0
    while turns < max_turns:
        try:
            line = input_fn(f"[{turns}] {env.language}> ")
        except EOFError:
            env.abort()
            break
        command = line.strip()
        if command == ":help":
            print_fn(_HELP)
            continue
        if command == ":quit":
            env.abort()
            break
        if command.startswith(":submit"):
            command = ("submit " + command[len(":submit"):].strip()).strip()
        if not command:
            continue
        turns += 1
        outcome = env.step(command)
        if outcome.done:
            print_fn(f"reward: {outcome.reward}")
            break
        print_fn(outcome.observation.text)
        interim = env.interim_reward()
        if interim is not None:
            print_fn(f"(interim reward: {interim:.4g})")
    if not env.done:
        outcome = env.finalize(terminated_by="max_turns")
        print_fn(f"turn cap reached; scored as submitted. reward: {outcome.reward}")
    trajectory = env.trajectory
    assert trajectory is not None
    return trajectory
