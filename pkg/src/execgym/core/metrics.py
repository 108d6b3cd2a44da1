"""Aggregate episode metrics.

Success Rate counts only episodes whose reward is exactly 1; partial
rewards are failures. Error % is the share of non-admissible actions over
all actions of all episodes.
"""

from __future__ import annotations

from typing import Iterable, Sequence

from .types import EpisodeTrajectory, MetricsSummary


def summarize(trajectories: Sequence[EpisodeTrajectory] | Iterable[EpisodeTrajectory]) -> MetricsSummary:
    trajs = list(trajectories)
    if not trajs:
        raise ValueError("summarize requires at least one trajectory")
    successes = 0
    actions = 0
    inadmissible = 0
    turns_total = 0
    for t in trajs:
        if t.reward is not None and t.reward == 1.0:
            successes += 1
        turns_total += len(t.turns)
        for action, _obs in t.turns:
            actions += 1
            if not action.admissible:
                inadmissible += 1
    return MetricsSummary(
        success_rate=successes / len(trajs),
        error_pct=100.0 * inadmissible / actions if actions else 0.0,
        mean_turns=turns_total / len(trajs),
        episode_count=len(trajs),
    )
