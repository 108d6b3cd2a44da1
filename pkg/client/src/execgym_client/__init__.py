"""Client bindings for the execgym session service."""

from .client import Observation, RemoteEnv, StepResult
from .errors import (
    BoundsError,
    ClosedSessionError,
    ConnectionFailure,
    InfrastructureError,
    LifecycleError,
    ProtocolViolation,
    RemoteEnvError,
    ServerError,
    SessionNotFound,
)

__all__ = [
    "RemoteEnv",
    "Observation",
    "StepResult",
    "RemoteEnvError",
    "ConnectionFailure",
    "ProtocolViolation",
    "ClosedSessionError",
    "ServerError",
    "SessionNotFound",
    "BoundsError",
    "LifecycleError",
    "InfrastructureError",
]
