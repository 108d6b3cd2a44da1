"""File-system delta detection over the git watch."""

from __future__ import annotations

import pytest

from execgym.backend.base import ContainerSpec
from execgym.backend.local import LocalBackend
from execgym.envs.bash.fschanges import FsChange, GitWatch


@pytest.fixture(scope="module")
def backend(tmp_path_factory):
    b = LocalBackend(base_dir=tmp_path_factory.mktemp("fswatch"))
    b.register_image(
        "tree",
        [
            "mkdir -p root/sub",
            "printf 'one\\n' > root/f1.txt",
            "printf 'two\\n' > root/sub/f2.txt",
            "printf 'spaced\\n' > 'root/a b.txt'",
        ],
    )
    return b


@pytest.fixture()
def watched(backend):
    handle = backend.provision(ContainerSpec(image="tree"))
    watch = GitWatch("/root", git_dir=handle.scratch_path("scm_root"))
    watch.install(handle)
    yield handle, watch
    handle.close()


class TestDetect:
    def test_clean_tree_is_empty(self, watched):
        handle, watch = watched
        assert watch.detect_changes(handle) == []

    def test_append_is_changed(self, watched):
        handle, watch = watched
        handle.exec_action("echo more >> root/f1.txt")
        assert watch.detect_changes(handle) == [FsChange("/root/f1.txt", "changed")]

    def test_new_file_is_added(self, watched):
        handle, watch = watched
        handle.exec_action("touch root/new.txt")
        assert watch.detect_changes(handle) == [FsChange("/root/new.txt", "added")]

    def test_removed_is_deleted(self, watched):
        handle, watch = watched
        handle.exec_action("rm root/sub/f2.txt")
        assert watch.detect_changes(handle) == [FsChange("/root/sub/f2.txt", "deleted")]

    def test_space_in_name_unquoted(self, watched):
        handle, watch = watched
        handle.exec_action("echo x >> 'root/a b.txt'")
        assert watch.detect_changes(handle) == [FsChange("/root/a b.txt", "changed")]

    def test_recreate_with_identical_content_is_clean(self, watched):
        handle, watch = watched
        handle.exec_action("rm root/f1.txt; printf 'one\\n' > root/f1.txt")
        assert watch.detect_changes(handle) == []

    def test_mode_flip_dropped_with_baseline(self, watched):
        handle, watch = watched
        baseline = watch.baseline_hashes(handle)
        handle.exec_action("chmod +x root/f1.txt")
        assert watch.detect_changes(handle, baseline) == []
        # without the baseline the mode flip is reported
        assert watch.detect_changes(handle) == [FsChange("/root/f1.txt", "changed")]

    def test_multiple_changes_sorted(self, watched):
        handle, watch = watched
        handle.exec_action("touch root/zz.txt root/aa.txt && echo x >> root/f1.txt")
        changes = watch.detect_changes(handle)
        assert changes == sorted(changes, key=lambda c: (c.path, c.kind))
        assert {(c.path, c.kind) for c in changes} == {
            ("/root/aa.txt", "added"),
            ("/root/zz.txt", "added"),
            ("/root/f1.txt", "changed"),
        }


class TestReset:
    def test_reset_restores_baseline_hashes(self, watched):
        handle, watch = watched
        baseline = watch.baseline_hashes(handle)
        handle.exec_action(
            "echo junk >> root/f1.txt && rm root/sub/f2.txt && touch root/extra.txt"
        )
        assert watch.detect_changes(handle) != []
        handle.snapshot_reset(watch.reset_commands, cwd="/root",
                              verify_command=watch.status_command)
        assert watch.detect_changes(handle) == []
        assert watch.baseline_hashes(handle) == baseline

    def test_reset_on_clean_tree_is_noop(self, watched):
        handle, watch = watched
        handle.snapshot_reset(watch.reset_commands, cwd="/root",
                              verify_command=watch.status_command)
        assert watch.detect_changes(handle) == []

    def test_watch_machinery_invisible_to_the_tree(self, watched):
        # the repository lives outside the watched root: file counts and
        # listings must not see any bookkeeping
        handle, watch = watched
        result = handle.exec_action("find root -type f | sort")
        listed = result.text.strip().splitlines()
        assert listed == ["root/a b.txt", "root/f1.txt", "root/sub/f2.txt"]
