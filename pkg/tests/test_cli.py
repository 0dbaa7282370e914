import json

import numpy as np
import pytest

from reptree import epsilon_of, load_csv
from reptree.cli import main


def run_cli(*argv):
    return main(list(argv))


def write_csv(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


@pytest.fixture
def two_csvs(tmp_path):
    full = write_csv(
        tmp_path,
        "full.csv",
        "a,b,y\n0,0,0\n1,1,1\n0.5,0.5,0\n2,2,1\n",
    )
    sub = write_csv(tmp_path, "sub.csv", "a,b,y\n0.1,0,0\n1,1,1\n")
    return full, sub


class TestRun:
    def test_writes_report_and_exits_zero(self, tmp_path, capsys):
        out = str(tmp_path / "out")
        code = run_cli(
            "run", "--circles-n", "80", "--subset-count", "3",
            "--subset-fraction", "0.4", "--max-depth", "3",
            "--seed", "5", "--out-dir", out,
        )
        assert code == 0
        doc = json.loads(open(f"{out}/report.json", encoding="utf-8").read())
        assert len(doc["subsets"]) == 3
        assert "report.json" in capsys.readouterr().out

    def test_byte_identical_reruns(self, tmp_path):
        out = str(tmp_path / "out")
        args = [
            "run", "--circles-n", "80", "--subset-count", "4",
            "--subset-fraction", "0.4", "--max-depth", "3", "--seed", "9",
            "--out-dir", out,
        ]
        assert run_cli(*args) == 0
        first = {name: open(f"{out}/{name}", "rb").read()
                 for name in ("report.json", "records.csv")}
        assert run_cli(*args) == 0
        for name, payload in first.items():
            assert open(f"{out}/{name}", "rb").read() == payload

    def test_config_file_with_flag_override(self, tmp_path):
        config = tmp_path / "exp.cfg"
        config.write_text(
            "circles_n = 80\nsubset_count = 2\nsubset-fraction = 0.5\n"
            "max_depth = 3\nseed = 4\n# a comment\nscale = true\n",
            encoding="utf-8",
        )
        out = str(tmp_path / "out")
        code = run_cli("run", "--config", str(config), "--subset-count", "3",
                       "--out-dir", out)
        assert code == 0
        doc = json.loads(open(f"{out}/report.json", encoding="utf-8").read())
        assert doc["config"]["subset_count"] == 3  # flag beats file
        assert doc["config"]["circles_n"] == 80

    def test_unknown_config_key_is_validation_error(self, tmp_path, capsys):
        config = tmp_path / "exp.cfg"
        config.write_text("no_such_key = 1\n", encoding="utf-8")
        assert run_cli("run", "--config", str(config)) == 1
        assert "no_such_key" in capsys.readouterr().err

    def test_validation_error_exit_code(self, capsys):
        assert run_cli("run", "--subset-fraction", "1.7") == 1
        assert "subset_fraction" in capsys.readouterr().err

    def test_missing_data_file_is_io_error(self, tmp_path):
        assert run_cli("run", "--data", str(tmp_path / "nope.csv")) == 2

    def test_csv_data_source(self, tmp_path):
        rng = np.random.default_rng(0)
        rows = ["a,b,y"] + [
            f"{rng.normal():.4f},{rng.normal():.4f},{int(rng.integers(2))}"
            for _ in range(60)
        ]
        path = write_csv(tmp_path, "data.csv", "\n".join(rows) + "\n")
        out = str(tmp_path / "out")
        code = run_cli("run", "--data", path, "--label-col", "y",
                       "--subset-count", "2", "--subset-fraction", "0.5",
                       "--max-depth", "2", "--out-dir", out)
        assert code == 0


class TestTheorem1:
    def test_success_exit_zero(self, capsys):
        code = run_cli("theorem1", "--trials", "15", "--seed", "3")
        assert code == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["trials"] == 15 and doc["failed"] == 0

    def test_config_file(self, tmp_path, capsys):
        config = tmp_path / "c.cfg"
        config.write_text("trials = 5\nradius_fraction = 0.5\n", encoding="utf-8")
        assert run_cli("theorem1", "--config", str(config)) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["trials"] == 5 and doc["radius_fraction"] == 0.5

    def test_failures_exit_code_three(self, monkeypatch, capsys):
        from reptree.experiment import CampaignSummary

        def rigged(**kwargs):
            return CampaignSummary(
                trials=1, passed=0, failed=1, skipped=0, vacuous=0,
                vacuous_conclusion_violations=0, radius_fraction=0.9, seed=0,
                failures=["trial 0: rigged"],
            )

        monkeypatch.setattr("reptree.cli.run_preservation_campaign",
                            lambda **kw: rigged())
        assert run_cli("theorem1", "--trials", "1") == 3
        assert json.loads(capsys.readouterr().out)["failed"] == 1


class TestEpsilon:
    def test_matches_library(self, two_csvs, capsys):
        full, sub = two_csvs
        assert run_cli("epsilon", "--data", full, "--subset", sub) == 0
        doc = json.loads(capsys.readouterr().out)
        expected = epsilon_of(load_csv(full), load_csv(sub)).epsilon
        assert doc["epsilon"] == pytest.approx(expected, abs=1e-15)
        assert doc["epsilon_is_finite"] is True
        assert doc["n_reference"] == 4 and doc["n_candidate"] == 2

    def test_uncovered_class_infinite(self, tmp_path, capsys):
        full = write_csv(tmp_path, "f.csv", "a,y\n0,0\n1,1\n")
        sub = write_csv(tmp_path, "s.csv", "a,y\n0,0\n")
        assert run_cli("epsilon", "--data", full, "--subset", sub) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["epsilon"] is None and doc["epsilon_is_finite"] is False
        assert doc["uncovered_classes"] == [1]

    def test_missing_required_flag(self, two_csvs, capsys):
        full, _ = two_csvs
        assert run_cli("epsilon", "--data", full) == 1
        assert "--subset" in capsys.readouterr().err


class TestTrainAndBoundary:
    def test_tree_pipeline(self, tmp_path, capsys):
        model_path = str(tmp_path / "model.json")
        code = run_cli("train", "--circles-n", "100", "--max-depth", "3",
                       "--seed", "2", "--out", model_path)
        assert code == 0
        doc = json.loads(open(model_path, encoding="utf-8").read())
        assert doc["model_type"] == "decision_tree"

        grid_path = str(tmp_path / "grid.csv")
        code = run_cli("boundary", "--model", model_path,
                       "--x1-min", "-1.5", "--x1-max", "1.5",
                       "--x2-min", "-1.5", "--x2-max", "1.5",
                       "--resolution", "8", "--out", grid_path)
        assert code == 0
        lines = open(grid_path, encoding="utf-8").read().strip().splitlines()
        assert len(lines) == 1 + 8 * 8

    def test_boosted_model(self, tmp_path):
        model_path = str(tmp_path / "model.json")
        code = run_cli("train", "--circles-n", "80", "--model", "boosted",
                       "--n-stages", "4", "--max-depth", "2", "--out", model_path)
        assert code == 0
        doc = json.loads(open(model_path, encoding="utf-8").read())
        assert doc["model_type"] == "gradient_boosting"
        assert len(doc["stages"]) == 4

    def test_unknown_model_kind(self, tmp_path):
        assert run_cli("train", "--model", "forest",
                       "--out", str(tmp_path / "m.json")) == 1


class TestParser:
    def test_help_exits_zero(self, capsys):
        assert run_cli("--help") == 0
        assert "reptree" in capsys.readouterr().out

    def test_unknown_flag(self, capsys):
        assert run_cli("run", "--bogus", "1") == 1

    def test_unknown_command(self):
        assert run_cli("frobnicate") == 1

    def test_no_command(self):
        assert run_cli() == 1
