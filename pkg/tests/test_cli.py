import json

import numpy as np
import pytest

from fairrank.cli import EXIT_CONFIG, EXIT_OK, EXIT_RUNTIME, main


def run_cli(args, capsys):
    code = main(args)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestGenerate:
    def test_half_half_to_file(self, tmp_path, capsys):
        out = tmp_path / "inst.json"
        code, _, _ = run_cli(
            ["generate", "--gen", "half-half", "--m", "10", "--n", "5", "--out", str(out)],
            capsys,
        )
        assert code == EXIT_OK
        data = json.loads(out.read_text())
        assert np.allclose(np.asarray(data["P"]), 0.5)
        assert data["m"] == 10

    def test_unknown_generator_runtime_error(self, tmp_path, capsys):
        code, _, err = run_cli(["generate", "--gen", "bogus"], capsys)
        assert code == EXIT_RUNTIME
        assert "ConfigInvalid" in err

    def test_generator_params(self, tmp_path, capsys):
        out = tmp_path / "inst.json"
        code, _, _ = run_cli(
            [
                "generate",
                "--gen",
                "fdr-synth",
                "--m",
                "12",
                "--n",
                "5",
                "--param",
                "tau=0.5",
                "--out",
                str(out),
            ],
            capsys,
        )
        assert code == EXIT_OK
        assert json.loads(out.read_text())["m"] == 12


class TestRank:
    @pytest.fixture
    def instance_file(self, tmp_path):
        path = tmp_path / "inst.json"
        path.write_text(
            json.dumps(
                {
                    "m": 3,
                    "n": 2,
                    "p": 2,
                    "structure": "disjoint",
                    "w": [1.0, 3.0, 2.0],
                    "P": [[0.5, 0.5]] * 3,
                }
            )
        )
        return str(path)

    def test_uncons_sorts(self, instance_file, tmp_path, capsys):
        out = tmp_path / "rank.json"
        code, _, _ = run_cli(
            ["rank", "--instance", instance_file, "--algo", "uncons", "--out", str(out)],
            capsys,
        )
        assert code == EXIT_OK
        data = json.loads(out.read_text())
        assert data["slots"] == [2, 3]  # 1-based: items with w = 3, 2

    def test_missing_file_config_error(self, capsys):
        code, _, _ = run_cli(["rank", "--instance", "/nope.json", "--algo", "uncons"], capsys)
        assert code == EXIT_CONFIG

    def test_nresilient_with_flags(self, instance_file, tmp_path, capsys):
        out = tmp_path / "rank.json"
        code, _, _ = run_cli(
            [
                "rank",
                "--instance",
                instance_file,
                "--algo",
                "nresilient",
                "--phi",
                "1.0",
                "--gamma-mode",
                "theoretical",
                "--c",
                "1.5",
                "--delta",
                "0.1",
                "--seed",
                "3",
                "--out",
                str(out),
            ],
            capsys,
        )
        assert code == EXIT_OK
        assert len(json.loads(out.read_text())["slots"]) == 2


class TestEvaluate:
    def test_all_one_group_rd_zero(self, tmp_path, capsys):
        inst = tmp_path / "inst.json"
        inst.write_text(
            json.dumps(
                {
                    "m": 6,
                    "n": 5,
                    "p": 2,
                    "structure": "disjoint",
                    "w": [6.0, 5.0, 4.0, 3.0, 2.0, 1.0],
                    "P": [[1.0, 0.0]] * 6,
                    "truth": [[1, 0]] * 6,
                }
            )
        )
        rank = tmp_path / "rank.json"
        rank.write_text(json.dumps({"m": 6, "n": 5, "slots": [1, 2, 3, 4, 5]}))
        code, out, _ = run_cli(
            ["evaluate", "--instance", str(inst), "--ranking", str(rank)], capsys
        )
        assert code == EXIT_OK
        report = json.loads(out)
        assert report["rd"] == pytest.approx(0.0)


class TestExperiment:
    def test_sweep_writes_csv(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(
            json.dumps(
                {
                    "instance": {"generator": "fdr-synth", "params": {"tau": 0.25}},
                    "algorithms": ["uncons"],
                    "phi_grid": [2.0, 1.0],
                    "iterations": 2,
                    "m": 16,
                    "n": 5,
                    "seed": 4,
                }
            )
        )
        out = tmp_path / "res.csv"
        code, _, _ = run_cli(
            ["experiment", "--config", str(cfg), "--out", str(out)], capsys
        )
        assert code == EXIT_OK
        lines = out.read_text().strip().split("\n")
        assert lines[0].startswith("algorithm,phi")
        assert len(lines) == 1 + 4

    def test_seed_override_changes_rows(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(
            json.dumps(
                {
                    "instance": {"generator": "fdr-synth"},
                    "algorithms": ["uncons"],
                    "phi_grid": [1.0],
                    "iterations": 1,
                    "m": 16,
                    "n": 5,
                    "seed": 4,
                }
            )
        )
        out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
        run_cli(["experiment", "--config", str(cfg), "--out", str(out1)], capsys)
        run_cli(
            ["experiment", "--config", str(cfg), "--seed", "5", "--out", str(out2)],
            capsys,
        )
        assert out1.read_text() != out2.read_text()

    def test_invalid_config_exit_code(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"algorithms": ["nope"], "m": 5, "n": 5}))
        code, _, _ = run_cli(["experiment", "--config", str(cfg)], capsys)
        assert code in (EXIT_CONFIG, EXIT_RUNTIME)
        assert code != EXIT_OK
