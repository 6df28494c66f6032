import json

import pytest

from uavtraj import config as config_mod
from uavtraj.cli import main

SMALL = {
    "scenario": {"area": {"X": 250.0, "Y": 250.0}, "n_ge": [5, 5], "n_ou": [2, 2], "n_nfz": [1, 1],
                 "n_bz": [1, 1], "n_rz": [1, 1], "zone_side": [25.0, 100.0]},
    "episode": {"t_max": 30},
    "sac": {"hidden": [8, 8], "batch": 16, "warmup_steps": 10, "grad_steps_per_episode": 2},
    "run": {"policy": "hybrid", "episodes": 3, "checkpoint_every": 2},
}


def _write(tmp_path, doc, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


def test_train_eval_replay(tmp_path, capsys):
    cfg = _write(tmp_path, SMALL)
    out = tmp_path / "run"
    assert main(["train", "--config", cfg, "--out", str(out), "--quiet"]) == 0
    res = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert res["episodes"] == 3
    ck = out / "checkpoints" / "final"
    assert main(["eval", "--ckpt", str(ck), "--episodes", "2", "--out", str(tmp_path / "ev")]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["n_episodes"] == 2 and 0 <= summary["DCR"] <= 1
    assert (tmp_path / "ev" / "eval_0002.jsonl").exists()
    assert main(["replay", "--log", str(out / "logs" / "episode_000003.jsonl")]) == 0
    assert json.loads(capsys.readouterr().out)["identical"] is True


def test_train_resume_extends_run(tmp_path, capsys):
    cfg = _write(tmp_path, SMALL)
    out = tmp_path / "run"
    main(["train", "--config", cfg, "--out", str(out), "--quiet"])
    rc = main(["train", "--config", cfg, "--out", str(out), "--episodes", "4", "--quiet",
               "--resume", str(out / "checkpoints" / "final")])
    assert rc == 0 and (out / "logs" / "episode_000004.jsonl").exists()


def test_config_errors_exit_2(tmp_path, capsys):
    bad = _write(tmp_path, {"scenario": {"v_limit": 12}})
    assert main(["train", "--config", bad, "--out", str(tmp_path / "x")]) == 2
    broken = tmp_path / "broken.json"
    broken.write_text("{\n oops\n}")
    assert main(["train", "--config", str(broken), "--out", str(tmp_path / "x")]) == 2
    assert "config error" in capsys.readouterr().err


def test_unreachable_advisor_exits_3(tmp_path, capsys):
    doc = json.loads(json.dumps(SMALL))
    doc["advisor"] = {"kind": "remote", "endpoint": {"url": "http://127.0.0.1:9/v1", "timeout_s": 0.5}}
    rc = main(["train", "--config", _write(tmp_path, doc), "--out", str(tmp_path / "r"), "--quiet"])
    assert rc == 3
    assert "resume" in capsys.readouterr().err
    assert any((tmp_path / "r" / "checkpoints").iterdir())


def test_sweep(tmp_path, capsys):
    spec = _write(tmp_path, {"variable": "N_OU", "values": [1, 2], "episodes": 2,
                             "policies": ["heuristic"]}, "sweep.json")
    assert main(["sweep", "--spec", spec, "--out", str(tmp_path / "sw")]) == 0
    lines = (tmp_path / "sw" / "metrics.csv").read_text().splitlines()
    assert len(lines) == 3


def test_schema_stdout(capsys):
    assert main(["schema"]) == 0
    assert json.loads(capsys.readouterr().out) == config_mod.json_schema()
