"""Report aggregation, the interactive loop, and CLI plumbing."""

from __future__ import annotations

import json

import pytest

from execgym.core.trajectory import save_trajectory
from execgym.core.types import ActionRecord, EpisodeTrajectory, Observation, TaskInstance
from execgym.envs.sql.env import SqlEnvironment, SqliteSessionProvider
from execgym.harness.cli import main
from execgym.harness.human import human_repl
from execgym.harness.report import report


def _traj(task_id, reward, hardness=None, admissible=(True,)):
    extras = {"hardness": hardness} if hardness else {}
    turns = [
        (ActionRecord(kind="code", payload="a", turn_index=i, admissible=adm), Observation(text="o"))
        for i, adm in enumerate(admissible)
    ]
    return EpisodeTrajectory(
        task=TaskInstance(id=task_id, query="q", gold="g", extras=extras),
        env_name="sql",
        turns=turns,
        reward=reward,
        terminated_by="submit",
        config_snapshot={"task_extras": extras},
    )


class TestReport:
    def test_grouped_success_rates(self, tmp_path):
        save_trajectory(_traj("e1", 1.0, "easy"), tmp_path)
        save_trajectory(_traj("e2", 0.0, "easy"), tmp_path)
        save_trajectory(_traj("h1", 0.0, "hard"), tmp_path)
        save_trajectory(_traj("h2", 0.5, "hard"), tmp_path)
        result = report(tmp_path, group_by="hardness")
        assert result.groups["easy"].success_rate == 0.5
        assert result.groups["hard"].success_rate == 0.0
        assert result.overall.success_rate == 0.25
        assert "easy" in result.render()

    def test_missing_group_key_bucketed_ungrouped(self, tmp_path):
        save_trajectory(_traj("a", 1.0, "easy"), tmp_path)
        save_trajectory(_traj("b", 1.0), tmp_path)
        result = report(tmp_path, group_by="hardness")
        assert result.groups["ungrouped"].episode_count == 1

    def test_unreadable_file_skipped_and_counted(self, tmp_path):
        save_trajectory(_traj("a", 1.0), tmp_path)
        (tmp_path / "sql_broken_x.json").write_text("{not json")
        result = report(tmp_path)
        assert result.overall.episode_count == 1
        assert result.skipped_files == 1
        assert "skipped 1" in result.render()

    def test_empty_directory_errors(self, tmp_path):
        with pytest.raises(ValueError):
            report(tmp_path)

    def test_missing_directory_errors(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            report(tmp_path / "nope")


class TestHumanRepl:
    def _env(self, sql_instances, sql_dumps, traj_dir=None):
        return SqlEnvironment(
            sql_instances, SqliteSessionProvider(sql_dumps), traj_dir=traj_dir, exec_timeout=20
        )

    def test_gold_then_submit(self, sql_instances, sql_dumps):
        env = self._env(sql_instances, sql_dumps)
        lines = iter([sql_instances[0].gold, ":submit"])
        printed = []
        traj = human_repl(env, index=0, input_fn=lambda p: next(lines), print_fn=printed.append)
        env.close()
        assert traj.reward == 1.0
        assert traj.terminated_by == "submit"
        assert any("interim reward" in p for p in printed)

    def test_turn_cap_forces_scoring(self, sql_instances, sql_dumps):
        env = self._env(sql_instances, sql_dumps)
        lines = iter(["SELECT 1"] * 99)
        traj = human_repl(
            env, index=0, max_turns=3, input_fn=lambda p: next(lines), print_fn=lambda s: None
        )
        env.close()
        assert traj.terminated_by == "max_turns"
        assert len(traj.turns) == 3
        assert traj.reward is not None

    def test_quit_aborts_and_persists(self, sql_instances, sql_dumps, tmp_path):
        env = self._env(sql_instances, sql_dumps, traj_dir=tmp_path)
        lines = iter(["SELECT 1", ":quit"])
        traj = human_repl(env, index=0, input_fn=lambda p: next(lines), print_fn=lambda s: None)
        env.close()
        assert traj.terminated_by == "abort"
        assert traj.reward is None
        assert len(list(tmp_path.glob("*.json"))) == 1

    def test_eof_aborts(self, sql_instances, sql_dumps):
        def raise_eof(prompt):
            raise EOFError

        env = self._env(sql_instances, sql_dumps)
        traj = human_repl(env, index=0, input_fn=raise_eof, print_fn=lambda s: None)
        env.close()
        assert traj.terminated_by == "abort"


class TestCli:
    def test_validate_python(self, capsys):
        code = main(["validate", "--env", "python", "--backend", "local"])
        out = capsys.readouterr().out
        assert code == 0
        assert "PASS: 8/8" in out

    def test_run_oracle_writes_trajectories_and_report_reads_them(self, tmp_path, capsys):
        code = main([
            "run", "--env", "sql", "--backend", "local", "--strategy", "try_again",
            "--policy", "oracle", "--indices", "0-2", "--traj-dir", str(tmp_path),
        ])
        assert code == 0
        summary = json.loads(capsys.readouterr().out.strip().rpartition("}")[0] + "}")
        assert summary["success_rate"] == 1.0
        assert len(list(tmp_path.glob("*.json"))) == 3

        code = main(["report", str(tmp_path), "--group-by", "hardness"])
        out = capsys.readouterr().out
        assert code == 0
        assert "easy" in out

    def test_parallel_workers(self, capsys):
        code = main([
            "run", "--env", "sql", "--backend", "local", "--strategy", "react",
            "--policy", "oracle", "--indices", "0-5", "--workers", "3",
        ])
        assert code == 0
        summary = json.loads(capsys.readouterr().out.strip().rpartition("}")[0] + "}")
        assert summary["episode_count"] == 6
        assert summary["success_rate"] == 1.0

    def test_bad_indices_rejected(self, capsys):
        code = main([
            "run", "--env", "sql", "--backend", "local", "--policy", "oracle",
            "--indices", "0,999",
        ])
        assert code == 1
        assert "out of range" in capsys.readouterr().err

    def test_model_policy_requires_endpoint(self, capsys):
        code = main(["run", "--env", "sql", "--backend", "local", "--policy", "model"])
        assert code == 2
