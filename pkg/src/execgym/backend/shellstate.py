"""Stateful shell execution shared by the backends.

Agent actions need shell-session semantics (``cd`` and exported variables
persist across turns) but must be individually killable on timeout. Each
action is therefore staged to a file and run by a short-lived runner that
restores the saved session state, sources the action, and persists state
afterwards. Sourcing a staged file keeps malformed input (unbalanced
quotes, stray heredocs) a prompt syntax error instead of a wedged stdin
stream, and ``exit N`` behaves like exiting the shell.

Non-exported shell variables do not survive between turns; exported ones
and the working directory do.
"""

from __future__ import annotations

RUNNER_TEMPLATE = """\
#!/bin/bash
# Episode action runner. Generated; one per sandbox.
CTRL={ctrl}
cd {workdir} 2>/dev/null || cd /
if [ -f "$CTRL/env.sh" ]; then . "$CTRL/env.sh" >/dev/null 2>&1 || true; fi
if [ -f "$CTRL/cwd" ]; then cd "$(cat "$CTRL/cwd")" 2>/dev/null || true; fi
. "$CTRL/cmd.sh" </dev/null
__eg_rc=$?
pwd > "$CTRL/cwd" 2>/dev/null
export -p > "$CTRL/env.sh" 2>/dev/null
exit $__eg_rc
"""

CMD_FILE = "cmd.sh"
CWD_FILE = "cwd"
ENV_FILE = "env.sh"
RUNNER_FILE = "runner.sh"


def render_runner(ctrl_dir: str, workdir: str) -> str:
    return RUNNER_TEMPLATE.format(ctrl=_sh_quote(ctrl_dir), workdir=_sh_quote(workdir))


def _sh_quote(path: str) -> str:
    return "'" + path.replace("'", "'\\''") + "'"
