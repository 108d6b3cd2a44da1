"""Targeted coverage: byte cap, endpoint parsing, idempotence, oracle matrix."""

from __future__ import annotations

import pytest

from execgym.backend.base import OUTPUT_BYTE_CAP, ContainerSpec
from execgym.backend.docker import _parse_endpoint
from execgym.data.validate import validate_gold
from execgym.envs import make_env
from execgym.errors import InfrastructureError
from execgym.harness.policy import ScriptedPolicy, oracle_script
from execgym.harness.strategies import StrategyConfig, run_episode


class TestOutputByteCap:
    def test_runaway_stdout_clipped_before_truncation(self, local_backend):
        handle = local_backend.provision(ContainerSpec(image="execgym-ctf:latest"))
        try:
            result = handle.exec_action("yes spam | head -c 3000000", timeout=30)
            assert len(result.stdout) <= OUTPUT_BYTE_CAP
        finally:
            handle.close()


class TestEndpointParsing:
    def test_default_is_local_socket(self, monkeypatch):
        monkeypatch.delenv("DOCKER_HOST", raising=False)
        endpoint = _parse_endpoint(None)
        assert endpoint.kind == "unix"
        assert endpoint.uds_path == "/var/run/docker.sock"

    def test_env_var_override(self, monkeypatch):
        monkeypatch.setenv("DOCKER_HOST", "tcp://10.0.0.5:2376")
        endpoint = _parse_endpoint(None)
        assert endpoint.kind == "tcp"
        assert (endpoint.host, endpoint.port) == ("10.0.0.5", 2376)

    def test_explicit_beats_env(self, monkeypatch):
        monkeypatch.setenv("DOCKER_HOST", "tcp://10.0.0.5:2376")
        endpoint = _parse_endpoint("unix:///run/user/engine.sock")
        assert endpoint.kind == "unix"
        assert endpoint.uds_path == "/run/user/engine.sock"

    def test_garbage_scheme_rejected(self):
        with pytest.raises(InfrastructureError):
            _parse_endpoint("ftp://nope")


class TestValidateIdempotence:
    def test_two_runs_identical(self, local_backend, python_instances):
        def factory():
            return make_env("python", backend=local_backend, exec_timeout=20)

        first = validate_gold(factory, python_instances)
        second = validate_gold(factory, python_instances)
        assert [(e.task_id, e.admissible, e.reward) for e in first.entries] == [
            (e.task_id, e.admissible, e.reward) for e in second.entries
        ]
        assert first.passed and second.passed

    def test_empty_dataset_rejected(self, local_backend):
        with pytest.raises(ValueError):
            validate_gold(lambda: make_env("python", backend=local_backend), [])

    def test_broken_gold_named(self, local_backend, python_instances):
        from execgym.core.types import TaskInstance

        broken = [
            python_instances[0],
            TaskInstance(
                id="busted",
                query="impossible",
                gold="def double(n):\n    return n",
                extras=python_instances[0].extras,
            ),
        ]
        report = validate_gold(
            lambda: make_env("python", dataset=broken, backend=local_backend), broken
        )
        assert not report.passed
        assert [e.task_id for e in report.failures()] == ["busted"]


class TestOracleDominance:
    """The gold-replay policy reaches reward 1 under every strategy it speaks."""

    KINDS = ("single_turn", "try_again", "react", "plan_solve")

    @pytest.mark.parametrize("env_name", ["bash", "sql", "python", "ctf"])
    def test_oracle_scores_one_under_every_strategy(self, env_name, local_backend):
        env = make_env(env_name, backend=local_backend, exec_timeout=30)
        try:
            for kind in self.KINDS:
                policy = ScriptedPolicy(oracle_script(env, env.instances[0], kind))
                traj = run_episode(env, policy, StrategyConfig.for_kind(kind), index=0)
                assert traj.reward == 1.0, (env_name, kind, traj.terminated_by)
        finally:
            env.close()
