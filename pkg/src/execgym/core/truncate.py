"""Observation truncation.

Raw execution output is capped to a configurable number of tokens before
it becomes an observation. Tokens are whitespace-delimited runs: a
model-agnostic proxy for model tokens, recorded in the episode config so
results stay comparable.
"""

from __future__ import annotations

import re

from .types import ErrorClass, Observation

DEFAULT_TOKEN_CAP = 1000
TRUNCATION_MARKER = "\n[truncated]"

_TOKEN_RE = re.compile(r"\S+")


def truncate_observation(
    raw: str,
    cap: int = DEFAULT_TOKEN_CAP,
    exit_status: int | None = None,
    error_class: ErrorClass = "none",
) -> Observation:
    """Build an Observation from raw output, keeping at most ``cap`` tokens.

    The kept prefix preserves the original spacing up to the end of the
    cap-th token; a marker is appended so agents can tell output was cut.
    Empty input passes through untouched.
    """
    if cap < 1:
        raise ValueError(f"token cap must be >= 1, got {cap}")
    count = 0
    end = len(raw)
    truncated = False
    for m in _TOKEN_RE.finditer(raw):
        count += 1
        if count == cap:
            end = m.end()
        elif count > cap:
            truncated = True
            break
    text = raw[:end] + TRUNCATION_MARKER if truncated else raw
    return Observation(
        text=text,
        truncated=truncated,
        exit_status=exit_status,
        error_class=error_class,
    )


def token_count(text: str) -> int:
    return len(_TOKEN_RE.findall(text))
