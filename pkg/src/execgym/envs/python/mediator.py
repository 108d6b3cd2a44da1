"""Interpreter mediator: runs inside the sandbox and simulates a REPL.

A bare interpreter cannot be driven turn-wise with faithful logging, so
this small application sits between the agent and the interpreter: it
reads length-prefixed JSON frames on stdin, evaluates code in a
persistent namespace with REPL echo semantics (expression values are
printed), and writes one response frame per request on stdout.

Self-contained and stdlib-only on purpose: the file is staged into
sandboxes verbatim and must run on a bare interpreter. It is also
importable by the host-side session code, which reuses the frame codec.

Ops: ``exec`` (run code, echo expression values), ``eval`` (evaluate one
expression, return its repr), ``reset`` (fresh namespace). A ``timeout``
field bounds each evaluation via an interval timer; timed-out requests
report error_class "timeout" and the session survives.
"""

from __future__ import annotations

import ast
import io
import json
import signal
import struct
import sys
import traceback
from contextlib import redirect_stderr, redirect_stdout
from typing import Any, BinaryIO

OUTPUT_CHAR_CAP = 1 << 20

_HEADER = struct.Struct(">I")


class _Timeout(Exception):
    pass


def _read_exact(stream: BinaryIO, n: int) -> bytes | None:
    chunks = b""
    while len(chunks) < n:
        chunk = stream.read(n - len(chunks))
        if not chunk:
            return None
        chunks += chunk
    return chunks


def read_request(stream: BinaryIO) -> dict[str, Any] | None:
    header = _read_exact(stream, _HEADER.size)
    if header is None:
        return None
    (length,) = _HEADER.unpack(header)
    payload = _read_exact(stream, length)
    if payload is None:
        return None
    return json.loads(payload.decode("utf-8"))


def write_response(stream: BinaryIO, message: dict[str, Any]) -> None:
    payload = json.dumps(message).encode("utf-8")
    stream.write(_HEADER.pack(len(payload)) + payload)
    stream.flush()


class Interpreter:
    """Persistent-namespace evaluator with REPL echo semantics."""

    def __init__(self) -> None:
        self.namespace: dict[str, Any] = {}
        self.reset()

    def reset(self) -> None:
        self.namespace.clear()
        self.namespace["__name__"] = "__main__"
        self.namespace["__builtins__"] = __builtins__

    def execute(self, code: str, timeout: float | None) -> dict[str, Any]:
        captured = io.StringIO()
        # agent code must not read the frame stream
        stdin_guard = io.StringIO()
        try:
            tree = ast.parse(code, mode="exec")
        except SyntaxError:
            return _failure(captured.getvalue(), traceback.format_exc(limit=0), "exec_error")
        trailing_expr: ast.Expression | None = None
        if tree.body and isinstance(tree.body[-1], ast.Expr):
            trailing_expr = ast.Expression(tree.body.pop().value)
        old_stdin = sys.stdin
        sys.stdin = stdin_guard
        _arm_timer(timeout)
        try:
            with redirect_stdout(captured), redirect_stderr(captured):
                if tree.body:
                    exec(compile(tree, "<session>", "exec"), self.namespace)
                if trailing_expr is not None:
                    value = eval(compile(trailing_expr, "<session>", "eval"), self.namespace)
                    if value is not None:
                        print(repr(value), file=captured)
        except _Timeout:
            return _failure(captured.getvalue(), "execution timed out", "timeout")
        except BaseException:
            return _failure(captured.getvalue(), _session_traceback(), "exec_error")
        finally:
            _arm_timer(None)
            sys.stdin = old_stdin
        return {"ok": True, "output": _cap(captured.getvalue()), "error": None, "error_class": "none"}

    def evaluate(self, code: str, timeout: float | None) -> dict[str, Any]:
        _arm_timer(timeout)
        try:
            value = eval(code, self.namespace)
        except _Timeout:
            return _failure("", "execution timed out", "timeout")
        except BaseException:
            return _failure("", _session_traceback(), "exec_error")
        finally:
            _arm_timer(None)
        return {"ok": True, "output": repr(value), "error": None, "error_class": "none"}


def _failure(output: str, error: str, error_class: str) -> dict[str, Any]:
    return {"ok": False, "output": _cap(output), "error": _cap(error), "error_class": error_class}


def _cap(text: str) -> str:
    return text if len(text) <= OUTPUT_CHAR_CAP else text[:OUTPUT_CHAR_CAP]


def _session_traceback() -> str:
    # drop the mediator's own frames; the agent sees only its code's trace
    etype, value, tb = sys.exc_info()
    frames = traceback.extract_tb(tb)
    kept = [f for f in frames if f.filename in ("<session>", "<string>")]
    head = "Traceback (most recent call last):\n" if kept else ""
    body = "".join(traceback.format_list(kept))
    tail = "".join(traceback.format_exception_only(etype, value))
    return head + body + tail


def _arm_timer(timeout: float | None) -> None:
    if hasattr(signal, "setitimer"):
        signal.setitimer(signal.ITIMER_REAL, timeout or 0.0)


def _on_alarm(_signum: int, _frame: Any) -> None:
    raise _Timeout()


def main() -> None:
    if hasattr(signal, "SIGALRM"):
        signal.signal(signal.SIGALRM, _on_alarm)
    interpreter = Interpreter()
    stdin = sys.stdin.buffer
    stdout = sys.stdout.buffer
    while True:
        try:
            request = read_request(stdin)
        except Exception:
            break
        if request is None:
            break
        op = request.get("op")
        code = request.get("code", "")
        timeout = request.get("timeout")
        if op == "exec":
            response = interpreter.execute(code, timeout)
        elif op == "eval":
            response = interpreter.evaluate(code, timeout)
        elif op == "reset":
            interpreter.reset()
            response = {"ok": True, "output": "", "error": None, "error_class": "none"}
        else:
            response = _failure("", f"unknown op {op!r}", "protocol_error")
        write_response(stdout, response)


if __name__ == "__main__":
    main()
