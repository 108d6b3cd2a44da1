"""File-system delta tracking over a version-controlled watched tree.

The watched root goes under version control at provision time; deltas per
episode come from the porcelain status listing, and resets restore the
provision-time state. The repository itself lives OUTSIDE the watched
tree (a detached git dir with the root as work tree): the watch machinery
must not perturb the system it watches — file counts, listings, and
resets would otherwise see bookkeeping artifacts.

Untracked files are additions. Paths whose status says "modified" but
whose content hash still equals the provision-time value are dropped:
permission flips and timestamp-only touches are not modifications worth
penalizing.
"""

from __future__ import annotations

import posixpath
from dataclasses import dataclass
from typing import Literal

from ...backend.base import ContainerHandle
from ...errors import InfrastructureError

ChangeKind = Literal["added", "changed", "deleted"]


@dataclass(frozen=True)
class FsChange:
    """One ``(path, modification kind)`` delta entry.

    ``path`` is absolute inside the sandbox and always under the watched
    root; entry equality is the (path, kind) pair.
    """

    path: str
    kind: ChangeKind


class GitWatch:
    """Change tracking for one watched root via a detached repository.

    ``git_dir`` must be a per-sandbox scratch location (see
    ``ContainerHandle.scratch_path``) so parallel sandboxes never share
    repository state.
    """

    def __init__(self, watched_root: str, git_dir: str):
        self.root = watched_root
        self.git_dir = git_dir
        self._git = f"git --git-dir={_q(self.git_dir)} --work-tree=."

    @property
    def init_commands(self) -> list[str]:
        return [
            f"mkdir -p {_q(self.git_dir)}",
            f"git --git-dir={_q(self.git_dir)} init -q",
            f"{self._git} config user.email sandbox@localhost",
            f"{self._git} config user.name sandbox",
            f"{self._git} add -A",
            f"{self._git} commit -qm baseline --allow-empty",
        ]

    @property
    def status_command(self) -> str:
        return f"{self._git} status --porcelain -uall"

    @property
    def reset_commands(self) -> list[str]:
        return [
            f"{self._git} reset --hard -q",
            f"{self._git} clean -fdq",
        ]

    def install(self, handle: ContainerHandle) -> None:
        """Version the watched tree so deltas and resets are possible."""
        for command in self.init_commands:
            res = handle.run(command, cwd=self.root)
            if not res.ok:
                raise InfrastructureError(
                    f"failed to install watch ({command!r}): "
                    f"{res.stderr.decode('utf-8', 'replace').strip()}"
                )

    def baseline_hashes(self, handle: ContainerHandle) -> dict[str, str]:
        """md5 of every file under the watched root, keyed by absolute path."""
        res = handle.run(
            r"find . -type f -print0 | sort -z | xargs -0 -r md5sum",
            cwd=self.root,
        )
        if not res.ok:
            raise InfrastructureError("failed to hash watched tree")
        hashes: dict[str, str] = {}
        for line in res.stdout.decode("utf-8", "replace").splitlines():
            if not line.strip():
                continue
            digest, _, rel = line.partition("  ")
            hashes[self._join(rel.strip())] = digest.strip()
        return hashes

    def detect_changes(
        self,
        handle: ContainerHandle,
        baseline: dict[str, str] | None = None,
    ) -> list[FsChange]:
        """One entry per changed path under the watched root.

        Status codes map to added/changed/deleted; untracked files report
        as added. With a ``baseline`` hash map, content-identical
        "changed" entries are dropped.
        """
        res = handle.run(self.status_command, cwd=self.root)
        if not res.ok:
            raise InfrastructureError(
                f"status query failed: {res.stderr.decode('utf-8', 'replace').strip()}"
            )
        changes: list[FsChange] = []
        for line in res.stdout.decode("utf-8", "replace").splitlines():
            if len(line) < 4:
                continue
            code, rel = line[:2], line[3:]
            path = self._join(_unquote(rel.strip()))
            kind = _kind_for(code)
            if kind is None:
                continue
            if kind == "changed" and baseline is not None:
                try:
                    current = handle.hash_file(path)
                except IsADirectoryError:
                    current = None
                if current is not None and current == baseline.get(path):
                    continue
            changes.append(FsChange(path=path, kind=kind))
        changes.sort(key=lambda c: (c.path, c.kind))
        return changes

    def _join(self, rel: str) -> str:
        return posixpath.normpath(posixpath.join(self.root, rel))


def _kind_for(code: str) -> ChangeKind | None:
    if code == "??":
        return "added"
    index, tree = code[0], code[1]
    if "D" in (index, tree):
        return "deleted"
    if "A" in (index, tree):
        return "added"
    if any(flag in (index, tree) for flag in ("M", "R", "C", "T", "U")):
        return "changed"
    return None


def _unquote(rel: str) -> str:
    # porcelain quotes paths containing specials: "a b\"c"
    if rel.startswith('"') and rel.endswith('"') and len(rel) >= 2:
        body = rel[1:-1]
        return body.encode("latin-1", "backslashreplace").decode("unicode_escape")
    return rel


def _q(path: str) -> str:
    return "'" + path.replace("'", "'\\''") + "'"
