"""Typed client-side errors.

Server error payloads surface as specific exception classes so agent
loops can react to the failure mode (retry, re-plan, bail) instead of
string-matching messages.
"""

from __future__ import annotations


class RemoteEnvError(Exception):
    """Base class for everything this client raises."""


class ConnectionFailure(RemoteEnvError):
    """Transport problem: could not connect, or the stream broke."""


class ProtocolViolation(RemoteEnvError):
    """Server response was not a valid protocol message."""


class ClosedSessionError(RemoteEnvError):
    """The client object was closed; create a new one."""


class ServerError(RemoteEnvError):
    """A structured error response from the server."""

    def __init__(self, error_type: str, message: str):
        self.error_type = error_type
        super().__init__(f"{error_type}: {message}")


class SessionNotFound(ServerError):
    pass


class BoundsError(ServerError, IndexError):
    pass


class LifecycleError(ServerError):
    pass


class InfrastructureError(ServerError):
    pass


_ERROR_TYPES = {
    "session_not_found": SessionNotFound,
    "bounds_error": BoundsError,
    "lifecycle_error": LifecycleError,
    "infrastructure_error": InfrastructureError,
}


def error_for(error_type: str, message: str) -> ServerError:
    return _ERROR_TYPES.get(error_type, ServerError)(error_type, message)
