import json
from pathlib import Path

import pytest

from corrlearn.cli import main

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def tiny_config(tmp_path, **overrides):
    cfg = json.loads((CONFIGS / "quick.json").read_text())
    cfg.update({"steps": 40, "trials": 2})
    cfg.update(overrides)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    return path


def test_run_subcommand(tmp_path, capsys):
    cfg = tiny_config(tmp_path)
    out = tmp_path / "out"
    assert main(["run", "--config", str(cfg), "--out", str(out)]) == 0
    assert (out / "trial_0.csv").exists()
    assert (out / "trial_1.csv").exists()
    assert (out / "weights.json").exists()
    assert "final smoothed latent loss" in capsys.readouterr().out


def test_run_seed_override_changes_nothing_for_sigma_zero(tmp_path):
    cfg = tiny_config(tmp_path)
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["run", "--config", str(cfg), "--out", str(a)]) == 0
    assert main(["run", "--config", str(cfg), "--seed", "0", "--out", str(b)]) == 0
    assert (a / "trial_0.csv").read_bytes() == (b / "trial_0.csv").read_bytes()


def test_sweep_subcommand(tmp_path):
    cfg = tiny_config(tmp_path, trials=1)
    out = tmp_path / "sweep"
    assert main(["sweep", "--config", str(cfg), "--axis", "threshold", "--out", str(out)]) == 0
    summary = (out / "summary.csv").read_text().splitlines()
    assert len(summary) == 6  # header + 5 thresholds


def test_bc_subcommand(tmp_path):
    cfg = tiny_config(tmp_path, trials=1, bc_samples=10, bc_epochs=2)
    out = tmp_path / "bc"
    assert main(["bc", "--config", str(cfg), "--out", str(out)]) == 0
    assert (out / "bc_trial.csv").exists()
    assert (out / "weights.json").exists()


def test_config_errors_exit_nonzero(tmp_path, capsys):
    missing = tmp_path / "nope.json"
    assert main(["run", "--config", str(missing)]) == 2
    assert "error:" in capsys.readouterr().err
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"map": "houseC", "steps": 0,
                               "teacher": {"w_star": [1, 0, 0, 0, 0, 0, 0]}}))
    assert main(["run", "--config", str(bad)]) == 2
    nomap = tiny_config(tmp_path, map="missing-house")
    assert main(["run", "--config", str(nomap)]) == 2


def test_unknown_subcommand_rejected():
    with pytest.raises(SystemExit):
        main(["explode"])
