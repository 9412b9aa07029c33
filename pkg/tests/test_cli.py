"""CLI subcommands, exit codes, artifacts."""

import json

import numpy as np
import pytest

from conftest import tiny_raw
from safrlm.cli import main
from safrlm.data import load_jsonl


@pytest.fixture()
def tiny_config_file(tmp_path):
    def write(**dotted):
        raw = tiny_raw(**dotted)
        raw["output_dir"] = str(tmp_path / "out")
        path = tmp_path / "config.json"
        path.write_text(json.dumps(raw))
        return path
    return write


class TestGenerate:
    def test_writes_requested_records(self, tmp_path, capsys):
        spec = tmp_path / "spec.json"
        spec.write_text(json.dumps({
            "n_records": 100, "l_text": [4, 6], "l_audio": [5, 5],
            "d_text": 7, "d_audio": 3, "seed": 9, "noise_sigma": 0.1}))
        out = tmp_path / "data.jsonl"
        assert main(["generate", "--spec", str(spec), "--out", str(out)]) == 0
        lines = out.read_text().strip().split("\n")
        assert len(lines) == 100
        split = load_jsonl(out)
        assert len(split) == 100

    def test_bad_spec_key_exits_one(self, tmp_path, capsys):
        spec = tmp_path / "spec.json"
        spec.write_text(json.dumps({"n_records": 5, "wrong": 1}))
        code = main(["generate", "--spec", str(spec), "--out", str(tmp_path / "d.jsonl")])
        assert code == 1
        assert "error" in capsys.readouterr().err

    def test_missing_spec_exits_one(self, tmp_path, capsys):
        code = main(["generate", "--spec", str(tmp_path / "none.json"),
                     "--out", str(tmp_path / "d.jsonl")])
        assert code == 1
        assert "not found" in capsys.readouterr().err


class TestUsageErrors:
    def test_unknown_subcommand(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == 1
        assert "usage" in capsys.readouterr().err

    def test_unknown_flag(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["train", "--bogus"])
        assert exc.value.code == 1
        assert "usage" in capsys.readouterr().err

    def test_no_subcommand(self, capsys):
        assert main([]) == 1
        assert "usage" in capsys.readouterr().err


class TestTrainEval:
    def test_train_writes_artifacts(self, tmp_path, tiny_config_file, capsys):
        cfg = tiny_config_file(**{"train.epochs": 2})
        assert main(["train", "--config", str(cfg)]) == 0
        out = tmp_path / "out"
        resolved = json.loads((out / "resolved_config.json").read_text())
        assert resolved["train"]["epochs"] == 2
        assert resolved["train"]["batch_size"] == 12
        history = json.loads((out / "history.json").read_text())
        assert len(history["train_loss"]) == 2
        assert (out / "checkpoint.npz").exists()

    def test_eval_prints_and_writes_metrics(self, tmp_path, tiny_config_file, capsys):
        cfg = tiny_config_file(**{"train.epochs": 1})
        main(["train", "--config", str(cfg)])
        data = tmp_path / "test.jsonl"
        spec = tmp_path / "spec.json"
        spec.write_text(json.dumps({
            "n_records": 10, "l_text": [8, 8], "l_audio": [8, 8],
            "d_text": 8, "d_audio": 8, "seed": 40}))
        main(["generate", "--spec", str(spec), "--out", str(data)])
        capsys.readouterr()
        code = main(["eval", "--config", str(cfg),
                     "--checkpoint", str(tmp_path / "out" / "checkpoint.npz"),
                     "--data", str(data)])
        assert code == 0
        out_text = capsys.readouterr().out
        assert "mae=" in out_text
        report = json.loads((tmp_path / "out" / "metrics.json").read_text())
        assert set(report) == {"acc7", "acc2", "f1", "mae", "corr"}

    def test_set_override_applies(self, tmp_path, tiny_config_file):
        cfg = tiny_config_file()
        assert main(["train", "--config", str(cfg), "--set", "train.epochs=1"]) == 0
        resolved = json.loads((tmp_path / "out" / "resolved_config.json").read_text())
        assert resolved["train"]["epochs"] == 1

    def test_env_seed_override(self, tmp_path, tiny_config_file, monkeypatch):
        cfg = tiny_config_file(**{"train.epochs": 1})
        monkeypatch.setenv("SAFRLM_SEED", "777")
        assert main(["train", "--config", str(cfg)]) == 0
        resolved = json.loads((tmp_path / "out" / "resolved_config.json").read_text())
        assert resolved["seed"] == 777

    def test_unknown_config_key_exits_one(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        raw = tiny_raw()
        raw["mystery"] = 1
        path.write_text(json.dumps(raw))
        assert main(["train", "--config", str(path)]) == 1
        assert "mystery" in capsys.readouterr().err

    def test_missing_config_exits_one(self, tmp_path, capsys):
        assert main(["train", "--config", str(tmp_path / "nope.json")]) == 1

    def test_missing_checkpoint_exits_one(self, tmp_path, tiny_config_file, capsys):
        cfg = tiny_config_file()
        data = tmp_path / "d.jsonl"
        spec = tmp_path / "spec.json"
        spec.write_text(json.dumps({"n_records": 2, "l_text": [8, 8],
                                    "l_audio": [8, 8], "d_text": 8, "d_audio": 8}))
        main(["generate", "--spec", str(spec), "--out", str(data)])
        code = main(["eval", "--config", str(cfg),
                     "--checkpoint", str(tmp_path / "none.npz"), "--data", str(data)])
        assert code == 1


class TestSweepAndGradcheck:
    def test_sweep_writes_csv(self, tmp_path, tiny_config_file, capsys):
        cfg = tiny_config_file(**{"train.epochs": 1, "eval.seeds": [1]})
        assert main(["sweep-blocks", "--config", str(cfg), "--n", "2,4"]) == 0
        csv_text = (tmp_path / "out" / "sweep.csv").read_text()
        lines = csv_text.strip().split("\n")
        assert lines[0] == "n,acc7,acc2,f1,mae,corr"
        assert len(lines) == 3
        assert lines[1].startswith("2,")
        assert lines[2].startswith("4,")

    def test_sweep_odd_n_exits_one(self, tiny_config_file, capsys):
        cfg = tiny_config_file()
        assert main(["sweep-blocks", "--config", str(cfg), "--n", "3"]) == 1

    def test_gradcheck_exit_zero_and_groups(self, tmp_path, tiny_config_file, capsys):
        cfg = tiny_config_file(**{
            "data.d_text": 5, "data.d_audio": 4,
            "data.synthetic.train.l_text": [4, 4],
            "data.synthetic.train.l_audio": [4, 4],
            "xadjust.ff_width": 6, "heads.hidden": 6,
        })
        assert main(["gradcheck", "--config", str(cfg)]) == 0
        out_text = capsys.readouterr().out
        assert "PASS" in out_text
        for family in ("align.conv_text", "fusion.w_text", "heads.cls_global"):
            assert family in out_text
        doc = json.loads((tmp_path / "out" / "gradcheck.json").read_text())
        assert doc["passed"] is True
