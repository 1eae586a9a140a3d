import json

import numpy as np
import pytest

from rrrmt.cli import main, parse_grid


def _manifest(out):
    return json.loads((out / "manifest.json").read_text())


def test_help_lists_subcommands(capsys):
    assert main(["--help"]) == 0
    text = capsys.readouterr().out
    for name in ("simulate", "rank-select", "estimate", "clt-check", "law", "thresholds"):
        assert name in text


def test_unknown_flag(capsys, tmp_path):
    assert main(["law", "--kind", "mp", "--beta", "1", "--bogus"]) == 1
    assert "unrecognized" in capsys.readouterr().err


def test_missing_subcommand():
    assert main([]) == 1


def test_law_table(tmp_path):
    out = tmp_path / "o"
    assert main(["law", "--kind", "ab", "--lambda", "0.2", "--beta", "0.5",
                 "--grid", "1000", "--out", str(out)]) == 0
    data = np.loadtxt(out / "law_ab.tsv", skiprows=1)
    assert data.shape == (1000, 3)
    np.testing.assert_allclose(data[[0, -1], 0], (0.108747, 229.891), rtol=1e-5)
    assert _manifest(out)["status"] == 0


def test_domain_error(tmp_path):
    out = tmp_path / "o"
    assert main(["law", "--kind", "ab", "--lambda", "-1", "--beta", "0.5",
                 "--out", str(out)]) == 2
    assert _manifest(out)["status"] == 2


def test_thresholds(tmp_path):
    out = tmp_path / "o"
    assert main(["thresholds", "--lambda-grid", "0.05:2:4", "--beta-grid", "0.1:3:3",
                 "--out", str(out)]) == 0
    lines = (out / "threshold_surface.csv").read_text().splitlines()
    assert lines[0].startswith("lambda,beta,theta_A,theta_Y,difference")
    assert len(lines) == 13


def test_grid_syntax():
    np.testing.assert_allclose(parse_grid("0:1:3"), [0, 0.5, 1])


def test_rank_select_config(tmp_path):
    cfg = tmp_path / "null.json"
    cfg.write_text(json.dumps({"N": 100, "p": 25, "r": [25, 75], "replications": 20}))
    out = tmp_path / "o"
    assert main(["rank-select", "--config", str(cfg), "--seed", "3", "--out", str(out),
                 "--threads", "2"]) == 0
    lines = (out / "rank_table.csv").read_text().splitlines()
    assert lines[0] == "r,algorithm,mean_rank,std_err,replications" and len(lines) == 9
    man = _manifest(out)
    assert man["parameters"]["master_seed"] == 3 and "numpy" in man["versions"]


def test_manifest_reproduces(tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    args = ["rank-select", "--N", "100", "--p", "25", "--r", "25", "--reps", "10"]
    assert main(args + ["--seed", "5", "--out", str(out1)]) == 0
    cfg = tmp_path / "replay.json"
    cfg.write_text(json.dumps(_manifest(out1)["parameters"]))
    assert main(["rank-select", "--config", str(cfg), "--out", str(out2)]) == 0
    assert (out1 / "rank_table.csv").read_text() == (out2 / "rank_table.csv").read_text()


def test_seed_env(tmp_path, monkeypatch):
    monkeypatch.setenv("RRR_SEED", "17")
    out = tmp_path / "o"
    assert main(["rank-select", "--N", "100", "--p", "25", "--r", "25", "--reps", "2",
                 "--out", str(out)]) == 0
    assert _manifest(out)["parameters"]["master_seed"] == 17
    assert main(["rank-select", "--N", "100", "--p", "25", "--r", "25", "--reps", "2",
                 "--seed", "2", "--out", str(out)]) == 0
    assert _manifest(out)["parameters"]["master_seed"] == 2


def test_flags_override_config(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"N": 100, "p": 25, "r": 25, "replications": 50}))
    out = tmp_path / "o"
    assert main(["rank-select", "--config", str(cfg), "--reps", "3", "--out", str(out)]) == 0
    assert _manifest(out)["parameters"]["replications"] == 3


def test_missing_model_params(tmp_path):
    assert main(["rank-select", "--N", "100", "--out", str(tmp_path)]) == 1


def test_estimate(tmp_path, capsys):
    out = tmp_path / "o"
    assert main(["estimate", "--N", "300", "--p", "250", "--r", "125", "--theta", "12",
                 "--out", str(out)]) == 0
    rows = json.loads((out / "estimates.json").read_text())
    assert {r["estimator"] for r in rows} == {"FromA", "FromY"}
    assert all(r["above_threshold"] for r in rows)


def test_clt_check(tmp_path):
    out = tmp_path / "o"
    assert main(["clt-check", "--N", "300", "--p", "250", "--r", "125", "--theta", "9",
                 "--reps", "20", "--out", str(out)]) == 0
    summary = json.loads((out / "clt_summary.json").read_text())
    assert summary["omega"] == pytest.approx(2.3972, abs=1e-4)
    assert len((out / "clt_FromA.tsv").read_text().split()) == 20


def test_simulate(tmp_path):
    out = tmp_path / "o"
    assert main(["simulate", "--N", "100", "--p", "66", "--r", "66", "--reps", "5",
                 "--out", str(out)]) == 0
    assert (out / "esd_fitted_r66_law.tsv").exists()
    assert (out / "tw_null_TW_Ahat_r66.tsv").exists()
