"""Core vocabulary: truncation, metrics, trajectory round trip."""

from __future__ import annotations

import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from execgym.core.metrics import summarize
from execgym.core.trajectory import load_trajectory, save_trajectory, trajectory_to_dict
from execgym.core.truncate import TRUNCATION_MARKER, token_count, truncate_observation
from execgym.core.types import (
    ActionRecord,
    EpisodeTrajectory,
    Observation,
    TaskInstance,
    parse_action,
)


class TestTruncate:
    def test_short_text_untouched(self):
        obs = truncate_observation("one two three four five", cap=1000)
        assert obs.text == "one two three four five"
        assert obs.truncated is False

    def test_long_text_keeps_first_cap_tokens(self):
        raw = " ".join(f"tok{i}" for i in range(1500))
        obs = truncate_observation(raw, cap=1000)
        assert obs.truncated is True
        body = obs.text[: -len(TRUNCATION_MARKER)]
        assert obs.text.endswith(TRUNCATION_MARKER)
        assert token_count(body) == 1000
        assert body.split()[-1] == "tok999"
        assert body.split()[0] == "tok0"

    def test_empty_text(self):
        obs = truncate_observation("", cap=5)
        assert obs.text == ""
        assert obs.truncated is False

    def test_cap_below_one_rejected(self):
        with pytest.raises(ValueError):
            truncate_observation("x", cap=0)

    def test_preserves_internal_spacing(self):
        raw = "aa   bb\n\ncc dd"
        obs = truncate_observation(raw, cap=3)
        assert obs.text == "aa   bb\n\ncc" + TRUNCATION_MARKER

    @given(st.text(max_size=400), st.integers(min_value=1, max_value=50))
    def test_never_exceeds_cap(self, raw, cap):
        obs = truncate_observation(raw, cap=cap)
        body = obs.text[: -len(TRUNCATION_MARKER)] if obs.truncated else obs.text
        assert token_count(body) <= cap
        assert obs.truncated == (token_count(raw) > cap)


class TestParseAction:
    def test_bare_submit(self):
        rec = parse_action("submit")
        assert rec.kind == "submit" and rec.payload == ""

    def test_submit_with_payload(self):
        rec = parse_action("submit flag{abc}")
        assert rec.kind == "submit" and rec.payload == "flag{abc}"

    def test_code_not_confused_with_submit_prefix(self):
        rec = parse_action("submit_job.sh --now")
        assert rec.kind == "code"

    def test_plain_code(self):
        assert parse_action("echo hi").kind == "code"


def _traj(task_id, rewards_turns):
    """Build a trajectory with given (admissible flags) turn list and reward."""
    reward, flags = rewards_turns
    task = TaskInstance(id=task_id, query="q", gold="g")
    turns = []
    for i, admissible in enumerate(flags):
        action = ActionRecord(kind="code", payload=f"a{i}", turn_index=i, admissible=admissible)
        turns.append((action, Observation(text=f"o{i}")))
    return EpisodeTrajectory(
        task=task, env_name="bash", turns=turns, reward=reward, terminated_by="submit"
    )


class TestMetrics:
    def test_success_counts_only_exact_one(self):
        trajs = [_traj("a", (1.0, [True])), _traj("b", (0.0, [True]))]
        summary = summarize(trajs)
        assert summary.success_rate == 0.5

    def test_partial_reward_is_failure(self):
        trajs = [_traj("a", (1.0, [True])), _traj("b", (3 / 7, [True]))]
        assert summarize(trajs).success_rate == 0.5

    def test_error_pct(self):
        trajs = [
            _traj("a", (1.0, [True, False, True, True, False])),
            _traj("b", (0.0, [True, False, True, True, True])),
        ]
        summary = summarize(trajs)
        assert summary.error_pct == pytest.approx(30.0)
        assert summary.mean_turns == 5.0
        assert summary.episode_count == 2

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            summarize([])

    def test_merge_associativity(self):
        a = [_traj(str(i), (1.0 if i % 2 else 0.0, [True] * (i + 1))) for i in range(6)]
        split = summarize(a[:2] + a[2:])
        merged = summarize(a)
        assert split == merged

    def test_aborted_episode_counts_as_failure(self):
        t = _traj("a", (None, [True]))
        t.terminated_by = "abort"
        summary = summarize([t, _traj("b", (1.0, [True]))])
        assert summary.success_rate == 0.5


class TestTrajectoryFile:
    def test_round_trip(self, tmp_path):
        traj = _traj("t-1", (0.5, [True, False]))
        traj.config_snapshot = {"token_cap": 1000, "task_extras": {"hardness": "easy"}}
        path = save_trajectory(traj, tmp_path)
        assert path.name.startswith("bash_t-1_")
        doc = json.loads(path.read_text())
        assert set(doc) == {
            "task_id", "env", "query", "gold", "turns", "reward",
            "reward_breakdown", "terminated_by", "config_snapshot",
        }
        assert [t["i"] for t in doc["turns"]] == [0, 1]
        assert doc["turns"][1]["admissible"] is False
        loaded = load_trajectory(path)
        assert loaded.reward == 0.5
        assert loaded.task.extras == {"hardness": "easy"}
        assert loaded.action_texts() == ["a0", "a1"]

    def test_unsafe_task_id_sanitized(self, tmp_path):
        traj = _traj("a/b c", (1.0, [True]))
        path = save_trajectory(traj, tmp_path)
        assert "/" not in path.name.replace(str(tmp_path), "")
        assert path.exists()

    def test_distinct_files_for_same_task(self, tmp_path):
        traj = _traj("same", (1.0, [True]))
        paths = {save_trajectory(traj, tmp_path) for _ in range(5)}
        assert len(paths) == 5

    def test_serialization_shape(self):
        doc = trajectory_to_dict(_traj("x", (None, [True])))
        assert doc["reward"] is None
        assert doc["turns"][0]["action_kind"] == "code"
