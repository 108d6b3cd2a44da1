"""Exception hierarchy shared across the framework.

Infrastructure failures (backend unreachable, container dead) are kept
distinct from task-level failures (inadmissible actions, reward 0), which
are never raised — they flow through observations and rewards.
"""

from __future__ import annotations


class ExecGymError(Exception):
    """Base class for all framework errors."""


class InfrastructureError(ExecGymError):
    """Backend or container plumbing failed (engine unreachable, container dead)."""


class ProvisionError(InfrastructureError):
    """Container could not be created, started, or initialized."""


class ResetError(InfrastructureError):
    """Snapshot reset failed; the environment must not start another episode."""


class EvaluationError(ExecGymError):
    """Reward could not be computed (twin provisioning or gold execution failed).

    The episode reward is undefined in this case; it is surfaced, never
    silently reported as 0.
    """


class LifecycleError(ExecGymError):
    """Operation called in the wrong episode state (e.g. step after done)."""


class BoundsError(ExecGymError, IndexError):
    """Dataset index outside the dataset."""


class DatasetFormatError(ExecGymError):
    """File is not in any accepted dataset format."""


class DatasetValidationError(ExecGymError):
    """One or more records violate the dataset schema.

    ``problems`` lists ``(record_index, message)`` pairs for every offending
    record, aggregated so a single run reports them all.
    """

    def __init__(self, problems: list[tuple[int, str]]):
        self.problems = problems
        detail = "; ".join(f"record {i}: {msg}" for i, msg in problems)
        super().__init__(f"dataset validation failed: {detail}")


class StagingError(ExecGymError):
    """Task assets could not be staged into the sandbox."""


class ProtocolError(ExecGymError):
    """Malformed or unsupported wire message."""


class SessionNotFoundError(ExecGymError):
    """Wire session id is unknown (never issued, closed, or reaped)."""


class EpisodeAbort(ExecGymError):
    """Raised by policies/clients to abort the running episode.

    The episode is persisted with ``terminated_by="abort"`` and a null
    reward; it is not scored as 0.
    """
