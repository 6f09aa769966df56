import json

import numpy as np
import pytest
import yaml

from boundary_vol.cli import main

FAST = ["--reps", "2000", "--points", "25", "--grid-min", "0.05", "--grid-max", "20"]


def _quotes(tmp_path, n=20000, seed=0, name="day.csv"):
    rng = np.random.default_rng(seed)
    x = np.log(100) + np.concatenate(([0.0], np.cumsum(rng.standard_normal(n) / np.sqrt(n))))
    ask = np.exp(x + rng.exponential(1.0, n + 1))
    bid = np.exp(x - rng.exponential(1.0, n + 1))
    p = tmp_path / name
    rows = "\n".join(f"{i},{float(a)!r},{float(b)!r}" for i, (a, b) in enumerate(zip(ask, bid)))
    p.write_text("time,ask_price,bid_price\n" + rows + "\n")
    return p


def test_ingest(tmp_path, capsys):
    p = _quotes(tmp_path, n=100)
    assert main(["ingest", "--input", str(p)]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out[0]["rows_read"] == 101 and out[0]["day_id"] == "day"


def test_ingest_with_schema_file(tmp_path):
    p = tmp_path / "raw.csv"
    p.write_text("T,A,B\n0,1010000,1000000\n1000,1011000,1000000\n")
    schema = tmp_path / "schema.yaml"
    schema.write_text(yaml.safe_dump({"time": "T", "ask_price": "A", "bid_price": "B",
                                      "time_unit": "ms", "price_scale": 10000}))
    out = tmp_path / "summary.json"
    assert main(["ingest", "--input", str(p), "--schema", str(schema), "--output", str(out)]) == 0
    assert json.loads(out.read_text())[0]["retained"] == 2


def test_errors_exit_with_code_two(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("time,ask_price,bid_price\n1,101,100\n0,101,100\n")
    assert main(["ingest", "--input", str(bad)]) == 2
    assert "time decreases at row 3" in capsys.readouterr().err
    assert main(["ingest", "--input", str(tmp_path / "none.csv")]) == 2


def test_estimate_day_is_reproducible(tmp_path):
    p = _quotes(tmp_path)
    a = tmp_path / "a.json"
    assert main(["estimate-day", "--input", str(p), "--output", str(a), "--seed", "3", *FAST]) == 0
    first = a.read_bytes()
    assert main(["estimate-day", "--input", str(p), "--output", str(a), "--seed", "3", *FAST]) == 0
    assert a.read_bytes() == first
    doc = json.loads(first)
    day = doc["days"][0]
    assert day["day_id"] == "day" and day["ask"]["side"] == "ask" and day["bid"]["side"] == "bid"
    assert 0 < day["ask"]["iv"] < 5 and doc["files"] == [str(a)]


def test_config_precedence(tmp_path, capsys):
    cfg = tmp_path / "cfg.yaml"
    cfg.write_text(yaml.safe_dump({"reps": 100, "points": 11,
                                   "calibrate-psi": {"k": 5.0, "grid-min": 0.5, "grid-max": 2.0}}))
    assert main(["calibrate-psi", "--config", str(cfg), "--k", "7.0", "--time-grid", "1000"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["K"] == 7.0
    assert len(doc["grid"]) == 11 and doc["grid"][0] == pytest.approx(0.5)
    assert doc["mc_config"]["replications"] == 100


def test_shared_keys_apply_only_where_known(tmp_path, capsys):
    p = tmp_path / "raw.csv"
    p.write_text("T,A,B\n0,101,100\n10,102,100\n")
    cfg = tmp_path / "cfg.yaml"
    cfg.write_text(yaml.safe_dump({"k": 3160, "lambda": 100,
                                   "schema": {"time": "T", "ask_price": "A", "bid_price": "B"}}))
    assert main(["ingest", "--input", str(p), "--config", str(cfg)]) == 0
    assert json.loads(capsys.readouterr().out)[0]["retained"] == 2
    cfg.write_text(yaml.safe_dump({"colour": "red"}))
    assert main(["ingest", "--input", str(p), "--config", str(cfg)]) == 2


def test_unknown_config_key(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"calibrate-psi": {"colour": "red"}}))
    assert main(["calibrate-psi", "--config", str(cfg)]) == 2
    assert "unknown config keys" in capsys.readouterr().err


def test_calibrate_psi_keys(tmp_path):
    out = tmp_path / "psi.json"
    assert main(["calibrate-psi", "--reps", "500", "--points", "9", "--output", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert {"model", "K", "grid", "values", "std_errors", "mc_config"} <= set(doc)
    assert main(["calibrate-psi", "--model", "regression", "--reps", "100"]) == 2


def test_simulate_then_estimate(tmp_path, capsys):
    table = tmp_path / "psi.json"
    assert main(["calibrate-psi", "--reps", "4000", "--points", "30", "--grid-min", "0.05",
                 "--grid-max", "20", "--output", str(table)]) == 0
    obs = tmp_path / "obs.csv"
    assert main(["simulate", "--n", "32768", "--nodes-per-bin", "100", "--output", str(obs),
                 "--path-output", str(tmp_path / "path.csv"), "--seed", "2"]) == 0
    truth = json.loads(capsys.readouterr().out)["integrated_variance"]
    assert main(["estimate", "--n", "32768", "--input", str(obs), "--psi-table", str(table),
                 "--tau-abs", "5"]) == 0
    est = json.loads(capsys.readouterr().out)
    assert abs(est["iv"] - truth) < 1.0
    assert est["sigma_sq_cap"] == 5.0
    assert main(["estimate", "--input", str(obs), "--psi-table", str(table)]) == 2


def test_simulate_regression_and_estimate(tmp_path, capsys):
    obs = tmp_path / "reg.csv"
    assert main(["simulate", "--model", "regression", "--n", "100000", "--output", str(obs)]) == 0
    capsys.readouterr()
    assert main(["estimate", "--model", "regression", "--input", str(obs), *FAST, "--parametric"]) == 0
    est = json.loads(capsys.readouterr().out)
    assert len(est["block_sigma_sq"]) == 1 and est["grids"]["model"] == "regression"


def test_oracle_check_csv(tmp_path):
    out = tmp_path / "oracle.csv"
    assert main(["oracle-check", "--reps", "0", "--wronskian-points", "10", "--output", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "x,wronskian,AI,abs_error" and len(lines) == 11
    assert main(["oracle-check", "--reps", "1000", "--time-grid", "1000", "--wronskian-points", "5",
                 "--output", str(out)]) == 0
    assert "closed_form" in out.read_text()


def test_rate_study_cli(tmp_path, capsys):
    assert main(["rate-study", "--n-values", "2048", "4096", "8192", "16384", "--study-reps", "100",
                 "--nodes-per-bin", "100", "--out-dir", str(tmp_path), *FAST]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert len(doc["rows"]) == 4 and (tmp_path / "rate_study.png").exists()


def test_robustness_study_cli(tmp_path, capsys):
    assert main(["robustness-study", "--study-reps", "10", "--nodes-per-bin", "100", *FAST]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["truncation"] == {"tau_abs": 2.0}
    assert main(["robustness-study", "--study-reps", "10", "--nodes-per-bin", "100", "--tau-adaptive",
                 "--tau-scale", "block", *FAST]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["truncation"] == {"tau_adaptive": True, "tau_scale": "block"}
