"""End-to-end CLI behavior through main()."""

import json

import pytest

from ltlrl import acceptance
from ltlrl.acceptance import CriterionResult
from ltlrl.cli import main
from ltlrl.harness import OUTPUT_DIR_ENV


@pytest.fixture
def base_config(tmp_path):
    path = tmp_path / "base.json"
    path.write_text(
        json.dumps(
            {
                "task": "reach-avoid",
                "difficulty": "easy",
                "method": "none",
                "seeds": [0, 1],
                "total_steps": 400,
                "initial_exploration_steps": 50,
                "eval_cadence": 100,
                "buffer_capacity": 400,
            }
        )
    )
    return path


def run_cli(*argv):
    return main([str(a) for a in argv])


class TestRun:
    def test_writes_run_files(self, tmp_path, base_config, capsys):
        out = tmp_path / "out"
        assert run_cli("run", "--config", base_config, "--out", out) == 0
        names = {p.name for p in out.iterdir()}
        assert names == {
            "reach-avoid_easy_none_seed0.csv",
            "reach-avoid_easy_none_seed0_episodes.csv",
            "reach-avoid_easy_none_seed0_manifest.json",
            "reach-avoid_easy_none_seed1.csv",
            "reach-avoid_easy_none_seed1_episodes.csv",
            "reach-avoid_easy_none_seed1_manifest.json",
            "reach-avoid_easy_none_aggregate.csv",
        }
        assert "final return" in capsys.readouterr().out

    def test_flags_override_config_file(self, tmp_path, base_config):
        out = tmp_path / "out"
        assert (
            run_cli(
                "run", "--config", base_config, "--method", "count",
                "--seed", 5, "--out", out,
            )
            == 0
        )
        names = {p.name for p in out.iterdir()}
        assert names == {
            "reach-avoid_easy_count_seed5.csv",
            "reach-avoid_easy_count_seed5_episodes.csv",
            "reach-avoid_easy_count_seed5_manifest.json",
        }
        manifest = json.loads(
            (out / "reach-avoid_easy_count_seed5_manifest.json").read_text()
        )
        assert manifest["config"]["method"] == "count"
        assert manifest["config"]["seeds"] == [5]

    def test_output_dir_env_fallback(self, tmp_path, base_config, monkeypatch):
        monkeypatch.setenv(OUTPUT_DIR_ENV, str(tmp_path / "envout"))
        assert run_cli("run", "--config", base_config) == 0
        assert (tmp_path / "envout" / "reach-avoid_easy_none_aggregate.csv").exists()

    def test_requires_task(self, capsys):
        assert run_cli("run", "--method", "none") == 1
        assert "task" in capsys.readouterr().err

    def test_unknown_method_fails_cleanly(self, tmp_path, base_config, capsys):
        code = run_cli(
            "run", "--config", base_config, "--method", "bogus", "--out", tmp_path
        )
        assert code == 1
        assert "bogus" in capsys.readouterr().err

    def test_invalid_json_fails_cleanly(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("{nope")
        assert run_cli("run", "--config", bad) == 1
        assert "config" in capsys.readouterr().err.lower()


class TestSweep:
    def test_grid_creates_one_directory_per_combo(self, tmp_path, base_config):
        out = tmp_path / "sweep"
        code = run_cli(
            "sweep", "--config", base_config, "--methods", "none,count",
            "--alphas", "10,100", "--scales", "0.5", "--out", out,
        )
        assert code == 0
        assert {p.name for p in out.iterdir()} == {
            "alpha10_scale0.5",
            "alpha100_scale0.5",
        }
        for combo in out.iterdir():
            names = {p.name for p in combo.iterdir()}
            assert "reach-avoid_easy_none_aggregate.csv" in names
            assert "reach-avoid_easy_count_aggregate.csv" in names
        manifest = json.loads(
            (out / "alpha10_scale0.5" / "reach-avoid_easy_count_seed0_manifest.json").read_text()
        )
        assert manifest["config"]["alpha"] == 10.0
        assert manifest["config"]["intrinsic_scale"] == 0.5

    def test_bad_alpha_list(self, base_config, capsys):
        assert run_cli("sweep", "--config", base_config, "--alphas", "1,oops") == 1
        assert "--alphas" in capsys.readouterr().err


class TestAggregate:
    def test_rebuilds_identical_aggregate(self, tmp_path, base_config):
        out = tmp_path / "out"
        assert run_cli("run", "--config", base_config, "--out", out) == 0
        agg = out / "reach-avoid_easy_none_aggregate.csv"
        original = agg.read_bytes()
        agg.unlink()
        code = run_cli(
            "aggregate", "--task", "reach-avoid", "--difficulty", "easy",
            "--method", "none", "--out", out,
        )
        assert code == 0
        assert agg.read_bytes() == original

    def test_missing_runs_fail_cleanly(self, tmp_path, capsys):
        code = run_cli(
            "aggregate", "--task", "reach-avoid", "--difficulty", "easy",
            "--method", "none", "--out", tmp_path,
        )
        assert code == 1
        assert "at least two" in capsys.readouterr().err


class TestValidate:
    def test_all_bundled_tasks_pass(self, capsys):
        assert run_cli("validate", "--samples", 40) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert len(lines) == 18
        assert all(line.endswith("ok") for line in lines)


class TestReproduce:
    def test_exit_zero_when_all_pass(self, monkeypatch, capsys):
        fake = [CriterionResult("a", True, "fine", 0.0)]
        monkeypatch.setattr(acceptance, "ALL_CHECKS", (lambda: fake[0],))
        assert run_cli("reproduce") == 0
        assert "PASS a" in capsys.readouterr().out

    def test_exit_one_on_any_failure(self, monkeypatch, capsys):
        fake = [
            CriterionResult("a", True, "fine", 0.0),
            CriterionResult("b", False, "off by a lot", 0.0),
        ]
        monkeypatch.setattr(
            acceptance, "ALL_CHECKS", tuple(lambda r=r: r for r in fake)
        )
        assert run_cli("reproduce") == 1
        assert "FAIL b" in capsys.readouterr().out
