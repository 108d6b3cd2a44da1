"""Cross-cutting invariants: reward bounds under fuzz, hook aborts, reaping."""

from __future__ import annotations

import random

import pytest

from execgym.core.trajectory import load_trajectory
from execgym.envs import make_env
from execgym.errors import EpisodeAbort

NASTY_ACTIONS = [
    "exit 7",
    'echo "unterminated',
    "';!@#$%^&*()[]{}|\\",
    "cd / && pwd",
    "ls -- --weird",
    "true & false",
    "सूचना δοκιμή 試験",
    ". /dev/null",
    "echo $((1/0))",
    "read x",
]


def _random_actions(rng: random.Random, count: int) -> list[str]:
    alphabet = "abcdefgh ()[]{}'\"|&;<>$`\\\n-_=~*?!."
    out = list(NASTY_ACTIONS)
    for _ in range(count):
        out.append("".join(rng.choice(alphabet) for _ in range(rng.randint(1, 40))))
    rng.shuffle(out)
    return out


@pytest.mark.parametrize("env_name", ["bash", "sql", "python", "ctf"])
def test_reward_bounded_under_fuzzed_actions(env_name, local_backend):
    rng = random.Random(hash(env_name) & 0xFFFF)
    env = make_env(env_name, backend=local_backend, exec_timeout=10)
    try:
        env.reset(0)
        for action in _random_actions(rng, 8):
            outcome = env.step(action)
            assert outcome.done is False
            assert outcome.reward is None
        outcome = env.step("submit")
        assert outcome.done is True
        assert outcome.reward is not None
        assert 0.0 <= outcome.reward <= 1.0
        breakdown = env.trajectory.reward_breakdown.as_dict()
        for value in breakdown.values():
            assert value >= 0.0
    finally:
        env.close()


def test_turn_indices_have_no_gaps(local_backend):
    env = make_env("sql", backend=local_backend, exec_timeout=10)
    try:
        env.reset(0)
        for action in ["SELECT 1", "SELEC nope", "SELECT 2", "submit"]:
            env.step(action)
        indices = [a.turn_index for a, _ in env.trajectory.turns]
        assert indices == list(range(len(indices)))
    finally:
        env.close()


def test_preprocess_hook_failure_aborts_before_turn_zero(local_backend, tmp_path):
    calls = []

    def broken_hook(instance, handle):
        calls.append(instance.id)
        raise RuntimeError("hook exploded")

    env = make_env(
        "sql", backend=local_backend, traj_dir=tmp_path, preprocess=broken_hook, exec_timeout=10
    )
    try:
        with pytest.raises(EpisodeAbort):
            env.reset(0)
        files = list(tmp_path.glob("*.json"))
        assert len(files) == 1
        saved = load_trajectory(files[0])
        assert saved.terminated_by == "abort"
        assert saved.turns == []
        assert calls  # the hook did run
    finally:
        env.close()


def test_preprocess_hook_receives_instance_and_handle(local_backend):
    seen = {}

    def hook(instance, handle):
        seen["id"] = instance.id
        seen["handle"] = handle

    env = make_env("bash", backend=local_backend, preprocess=hook, exec_timeout=15)
    try:
        env.reset(0)
        assert seen["id"] == "bash-fs1-01"
        assert seen["handle"] is env.sandbox_handle()
    finally:
        env.close()


def test_idle_sessions_are_reaped(local_backend):
    from execgym.service.server import SessionManager

    manager = SessionManager(
        lambda name, params: make_env(name, backend=local_backend, exec_timeout=10),
        idle_timeout=0.0,
    )
    session = manager.create("sql", {})
    assert manager.count == 1
    session.last_used -= 1.0
    assert manager.reap_idle() == 1
    assert manager.count == 0


def test_mysql_provider_assembles_init_dump(sql_dumps):
    from execgym.backend.base import ContainerBackend, ContainerSpec
    from execgym.envs.sql.env import MySqlSessionProvider

    captured = {}

    class SpecCapturingBackend(ContainerBackend):
        name = "capture"

        def provision(self, spec: ContainerSpec):
            captured["spec"] = spec
            raise RuntimeError("stop after capture")

    provider = MySqlSessionProvider(SpecCapturingBackend(), sql_dumps, root_password="pw")
    with pytest.raises(RuntimeError):
        provider.get("broadcast")
    spec = captured["spec"]
    assert spec.entry_mode == "service"
    assert spec.env_vars["MYSQL_ROOT_PASSWORD"] == "pw"
    assert spec.ports == [3306]
    (path, data), = spec.files.items()
    assert path == "/docker-entrypoint-initdb.d/000-fixtures.sql"
    text = data.decode()
    # one database-selection header per dump, dumps included verbatim
    assert "CREATE DATABASE IF NOT EXISTS academy;" in text
    assert "USE broadcast;" in text
    assert "CREATE TABLE channel" in text
    assert "CREATE TABLE student" in text
