"""Flag environment: staging safety, exact-match scoring, open action space."""

from __future__ import annotations

import json

import pytest

from execgym.envs.ctf.bundle import CtfAsset, CtfTask, load_bundle, load_bundles
from execgym.envs.ctf.env import CtfEnvironment, ctf_reward, stage_assets
from execgym.errors import StagingError
from execgym.fixtures import fixture_path


@pytest.fixture(scope="module")
def bundles_and_instances():
    return load_bundles(fixture_path("ctf", "tasks"))


@pytest.fixture()
def env(local_backend, bundles_and_instances):
    bundles, instances = bundles_and_instances
    e = CtfEnvironment(instances, local_backend, bundles, exec_timeout=20)
    yield e
    e.close()


class TestReward:
    def test_exact_match(self):
        task = CtfTask(task_id="t", instruction="i", flag="flag{exact}")
        assert ctf_reward("flag{exact}", task) == 1

    def test_one_character_off(self):
        task = CtfTask(task_id="t", instruction="i", flag="flag{exact}")
        assert ctf_reward("flag{exacto}", task) == 0

    def test_surrounding_whitespace_trimmed(self):
        task = CtfTask(task_id="t", instruction="i", flag="flag{exact}")
        assert ctf_reward("  flag{exact}\n", task) == 1

    def test_reward_is_binary(self, env):
        env.reset(0)
        outcome = env.step("submit flag{half-right")
        assert outcome.reward in (0.0, 1.0)


class TestBundles:
    def test_all_shipped_bundles_valid(self, bundles_and_instances):
        bundles, instances = bundles_and_instances
        assert len(bundles) == 5
        assert {t.extras["task_id"] for t in instances} == set(bundles)

    def test_bad_flag_pattern_rejected(self, tmp_path):
        bundle = tmp_path / "weird"
        bundle.mkdir()
        (bundle / "task.json").write_text(json.dumps(
            {"instruction": "find it", "flag": "not-a-flag", "assets": []}
        ))
        with pytest.raises(StagingError):
            load_bundle(bundle)

    def test_missing_asset_rejected(self, tmp_path):
        bundle = tmp_path / "broken"
        bundle.mkdir()
        (bundle / "task.json").write_text(json.dumps({
            "instruction": "x", "flag": "flag{x}",
            "assets": [{"src": "assets/missing.bin", "dst": "/ctf/missing.bin"}],
        }))
        with pytest.raises(StagingError):
            load_bundle(bundle)


class TestStaging:
    def test_assets_present_with_mode(self, env, bundles_and_instances):
        bundles, instances = bundles_and_instances
        index = next(i for i, t in enumerate(instances) if t.id == "xor-cipher")
        env.reset(index)
        outcome = env.step("ls ctf && test -x ctf/encoder.py && echo EXEC-BIT-OK")
        assert "cipher.bin" in outcome.observation.text
        assert "EXEC-BIT-OK" in outcome.observation.text

    def test_zero_asset_task_is_noop(self, local_backend):
        from execgym.backend.base import ContainerSpec

        handle = local_backend.provision(ContainerSpec(image="execgym-ctf:latest"))
        try:
            stage_assets(handle, CtfTask(task_id="t", instruction="i", flag="flag{x}"))
        finally:
            handle.close()

    def test_destination_collision_rejected(self, local_backend, tmp_path):
        from execgym.backend.base import ContainerSpec

        asset_file = tmp_path / "a.bin"
        asset_file.write_bytes(b"data")
        task = CtfTask(
            task_id="t", instruction="i", flag="flag{x}",
            assets=[
                CtfAsset(src=asset_file, dst="/ctf/same"),
                CtfAsset(src=asset_file, dst="/ctf/same"),
            ],
        )
        handle = local_backend.provision(ContainerSpec(image="execgym-ctf:latest"))
        try:
            with pytest.raises(StagingError):
                stage_assets(handle, task)
        finally:
            handle.close()

    def test_plaintext_flag_requires_declaration(self, local_backend, tmp_path):
        from execgym.backend.base import ContainerSpec

        leaky = tmp_path / "leaky.txt"
        leaky.write_text("here it is: flag{leaked}\n")
        task = CtfTask(
            task_id="t", instruction="i", flag="flag{leaked}",
            assets=[CtfAsset(src=leaky, dst="/ctf/leaky.txt")],
        )
        handle = local_backend.provision(ContainerSpec(image="execgym-ctf:latest"))
        try:
            with pytest.raises(StagingError):
                stage_assets(handle, task)
            task.flag_in_assets = True
            stage_assets(handle, task)  # declared: allowed
        finally:
            handle.close()

    def test_assets_do_not_leak_across_tasks(self, env):
        env.reset(0)  # encoded-note
        assert "note.b64" in env.step("ls ctf").observation.text
        env.step("submit flag{wrong}")
        env.reset(1)  # hidden-lines
        listing = env.step("ls ctf").observation.text
        assert "haystack.txt" in listing
        assert "note.b64" not in listing


class TestMultiLanguageActions:
    def test_python_one_liner_through_shell(self, env):
        env.reset(0)
        outcome = env.step("python3 -c \"print(6 * 7)\"")
        assert outcome.observation.text.strip() == "42"
        assert outcome.info["admissible"] is True
