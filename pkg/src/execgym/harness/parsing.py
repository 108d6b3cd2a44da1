"""Parsers for model output. Total functions: arbitrary input never raises.

Two protocols are parsed: fenced code blocks (plain code-only strategies)
and the interleaved Thought/Action protocol, where an action is either
``execute[<code>]`` or ``submit``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

_FENCE_RE = re.compile(r"```([A-Za-z0-9_+-]*)[ \t]*\n?(.*?)```", re.DOTALL)
_OPEN_FENCE_RE = re.compile(r"```[A-Za-z0-9_+-]*[ \t]*\n?(.*)\Z", re.DOTALL)

_ACTION_RE = re.compile(r"Action(?:\s*\d+)?\s*:\s*(.*)", re.DOTALL | re.IGNORECASE)
_SUBMIT_RE = re.compile(r"^submit\b[ \t]*(.*?)\s*$", re.DOTALL | re.IGNORECASE)
_EXECUTE_RE = re.compile(r"^execute\s*\[(.*)\]", re.DOTALL | re.IGNORECASE)
_THOUGHT_RE = re.compile(
    r"Thought(?:\s*\d+)?\s*:\s*(.*?)(?=\n\s*(?:Action|Thought|Observation)\b|\Z)",
    re.DOTALL | re.IGNORECASE,
)

FORMAT_REMINDER = (
    "Your last response could not be parsed. Reply with interleaved "
    "Thought/Action steps; the action must be either "
    "'Action <k>: execute[<code>]' or 'Action <k>: submit'."
)


@dataclass
class ReactTurn:
    """Parsed Thought/Action emission.

    ``action`` is None when no action line was found (the caller should
    log a format-reminder turn), "submit" for submission (``payload``
    carries any inline submission), or "execute" with the code payload.
    """

    thought: str = ""
    action: str | None = None  # None | "execute" | "submit"
    payload: str = ""


def parse_react(raw: str) -> ReactTurn:
    thought_match = _THOUGHT_RE.search(raw)
    thought = thought_match.group(1).strip() if thought_match else ""
    action_match = _ACTION_RE.search(raw)
    if not action_match:
        return ReactTurn(thought=thought, action=None)
    body = action_match.group(1).strip()
    submit = _SUBMIT_RE.match(body)
    if submit:
        return ReactTurn(thought=thought, action="submit", payload=submit.group(1).strip())
    execute = _EXECUTE_RE.match(body)
    if execute:
        return ReactTurn(thought=thought, action="execute", payload=execute.group(1))
    return ReactTurn(thought=thought, action=None)


def parse_code_block(raw: str, language_tag: str = "") -> str:
    """First fenced block with a matching (or absent) language tag.

    Without any fence the whole trimmed output is taken as code; an
    unclosed fence yields everything after the fence line.
    """
    wanted = language_tag.strip().lower()
    for match in _FENCE_RE.finditer(raw):
        tag = match.group(1).strip().lower()
        if not tag or not wanted or tag == wanted:
            return match.group(2).strip()
    open_fence = _OPEN_FENCE_RE.search(raw)
    if open_fence and "```" in raw:
        return open_fence.group(1).strip()
    return raw.strip()


_PLAN_ITEM_RE = re.compile(r"^\s*(\d+)\s*[.)]\s*(.+?)\s*$", re.MULTILINE)


def parse_plan(raw: str) -> list[str]:
    """Numbered plan items, in order of their numbers as written."""
    return [m.group(2) for m in _PLAN_ITEM_RE.finditer(raw)]
