"""Interactive, execution-grounded coding tasks.

Agents issue code actions against sandboxed environments across multiple
turns, receive execution feedback as observations, and are scored by
execution-based reward functions.

The common entry points:

    from execgym import make_env, resolve_backend
    env = make_env("sql", backend=resolve_backend("local"))
    obs, task = env.reset(0)
    outcome = env.step("SELECT 1")
"""

from .core.env import Environment, StepOutcome
from .core.metrics import summarize
from .core.types import (
    ActionRecord,
    EpisodeTrajectory,
    MetricsSummary,
    Observation,
    TaskInstance,
)
from .envs import ENV_NAMES, make_env, resolve_backend

__version__ = "0.1.0"

__all__ = [
    "ActionRecord",
    "ENV_NAMES",
    "Environment",
    "EpisodeTrajectory",
    "MetricsSummary",
    "Observation",
    "StepOutcome",
    "TaskInstance",
    "__version__",
    "make_env",
    "resolve_backend",
    "summarize",
]
