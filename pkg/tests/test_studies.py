import math

import numpy as np
import pytest

from boundary_vol.errors import ConfigError, DataError
from boundary_vol.estimator import EstimatorConfig
from boundary_vol.excursion import MCConfig
from boundary_vol.paths import simulate_brownian
from boundary_vol.psi import default_grid
from boundary_vol.quotes import QuoteSeries, ingest_quotes_csv
from boundary_vol.studies import (
    DEFAULT_SCENARIOS,
    JumpScenario,
    RunReport,
    SimulationSetup,
    calibrate_day_table,
    estimate_day,
    laplace_match_table,
    rate_study,
    robustness_study,
    rows_to_csv,
)

REG = EstimatorConfig(K=31.6, kappa=2.0, lam=1.0, model="regression")
GRID = default_grid(0.05, 20.0, 10)


def _synthetic_day(n, seed, lam=1.0):
    """Constant unit volatility; ask above and bid below the efficient log-price."""
    x = simulate_brownian(n, seed).x_values + math.log(100.0)
    rng = np.random.default_rng(seed)
    ask = x + rng.exponential(1 / lam, n + 1)
    bid = x - rng.exponential(1 / lam, n + 1)
    return QuoteSeries(f"day{seed}", np.linspace(0, 1, n + 1), ask, bid, np.ones(n + 1, dtype=int))


@pytest.fixture(scope="module")
def day():
    return _synthetic_day(100000, 1)


@pytest.fixture(scope="module")
def day_table(day):
    return calibrate_day_table(day, "ask", REG, GRID, MCConfig(replications=4000, time_grid=1000, seed=2))


def test_estimate_day_recovers_unit_variance(day, day_table):
    est = estimate_day(day, "ask", REG, day_table)
    assert abs(est.iv - 1.0) <= 0.5
    assert est.extra == {"day_id": "day1", "side": "ask", "events": 100001}


def test_bid_side_is_mirror_of_ask(day_table):
    q = _synthetic_day(100000, 4)
    c = q.best_ask.min() - 1.0
    mirror = QuoteSeries(q.day_id, q.timestamps, q.best_ask, 2 * c - q.best_ask, q.multiplicity)
    a = estimate_day(mirror, "ask", REG, day_table)
    b = estimate_day(mirror, "bid", REG, day_table)
    assert a.iv == b.iv
    np.testing.assert_array_equal(a.block_sigma_sq, b.block_sigma_sq)


def test_estimate_day_requires_regression(day, day_table):
    with pytest.raises(ConfigError):
        estimate_day(day, "ask", EstimatorConfig(K=31.6, kappa=2.0), day_table)


def test_too_few_events(day_table):
    with pytest.raises(DataError, match="insufficient events"):
        estimate_day(_synthetic_day(20, 3), "ask", REG, day_table)


def test_layout_mismatch_with_other_day(day_table):
    with pytest.raises(ConfigError):
        estimate_day(_synthetic_day(50000, 5), "ask", REG, day_table)


def test_lobster_style_file(tmp_path):
    # headerless, integer prices in units of 1e-4, extra size columns
    q = _synthetic_day(20000, 6)
    t = 34200 + 23400 * q.timestamps
    lines = [f"{ti:.9f},{round(np.exp(a) * 1e4)},{100},{round(np.exp(b) * 1e4)},{200}"
             for ti, a, b in zip(t, q.best_ask, q.best_bid)]
    p = tmp_path / "AAPL_orderbook.csv"
    p.write_text("\n".join(lines) + "\n")
    schema = {"time": "Time", "ask_price": "AskPrice1", "bid_price": "BidPrice1", "price_scale": 10000,
              "columns": ["Time", "AskPrice1", "AskSize1", "BidPrice1", "BidSize1"]}
    quotes = ingest_quotes_csv(p, schema)
    c = quotes.counts
    assert c["rows_read"] == 20001 and c["retained"] + c["duplicates"] + c["same_timestamp"] + c["crossed"] == 20001
    report = RunReport(config={"K": 31.6})
    mc = MCConfig(replications=1000, time_grid=1000, seed=1)
    ests = [estimate_day(quotes, s, REG, calibrate_day_table(quotes, s, REG, GRID, mc)) for s in ("ask", "bid")]
    report.add_day(quotes, *ests)
    doc = report.to_dict()["days"][0]
    assert doc["ingest"]["rows_read"] == 20001
    assert all(math.isfinite(e.iv) and e.iv > 0 for e in ests)
    assert set(doc["truncated"]) == {"ask", "bid"}


# simulation studies -------------------------------------------------------

def test_rate_study_argument_checks(ppp_table):
    setup = SimulationSetup(nodes_per_bin=100)
    with pytest.raises(ConfigError):
        rate_study([4096, 8192], 100, setup, ppp_table)
    with pytest.raises(ConfigError):
        rate_study([2048, 4096, 8192, 16384], 50, setup, ppp_table)


def test_rate_study_outputs_are_reproducible(ppp_table, tmp_path):
    setup = SimulationSetup(nodes_per_bin=100, seed=4)
    rep = rate_study([2048, 4096, 8192, 16384], 100, setup, ppp_table, tmp_path)
    names = ("rate_study.csv", "rate_study.png", "rate_study.json")
    first = {f: (tmp_path / f).read_bytes() for f in names}
    again = rate_study([2048, 4096, 8192, 16384], 100, setup, ppp_table, tmp_path)
    assert {f: (tmp_path / f).read_bytes() for f in names} == first
    assert again.slope == rep.slope and len(rep.rows) == 4
    assert rep.slope < 0


def test_robustness_control_unaffected_by_truncation(ppp_table):
    setup = SimulationSetup(nodes_per_bin=100, seed=3)
    rep = robustness_study(4096, 200, setup, ppp_table, {"tau_abs": 3.0}, scenarios=DEFAULT_SCENARIOS[:1])
    row = rep.row("none")
    assert abs(row["mean_difference"]) <= row["se_error_untruncated"]
    assert row["ratio_untruncated"] == 1.0


def test_robustness_scenarios_reported(ppp_table, tmp_path):
    setup = SimulationSetup(nodes_per_bin=100, seed=3)
    rep = robustness_study(4096, 20, setup, ppp_table, {"tau_abs": 2.0}, out_dir=tmp_path)
    assert [r["scenario"] for r in rep.rows] == ["none", "x_jumps", "sigma_jump"]
    for r in rep.rows:
        assert all(math.isfinite(v) for k, v in r.items() if k != "scenario")
    assert rep.row("x_jumps")["ratio_untruncated"] > rep.row("x_jumps")["ratio_truncated"]
    assert (tmp_path / "robustness_study.csv").exists() and (tmp_path / "robustness_study.json").exists()


def test_robustness_thread_invariance(ppp_table):
    a = robustness_study(4096, 12, SimulationSetup(nodes_per_bin=100, seed=8, threads=1), ppp_table, {"tau_abs": 2.0})
    b = robustness_study(4096, 12, SimulationSetup(nodes_per_bin=100, seed=8, threads=3), ppp_table, {"tau_abs": 2.0})
    assert a.to_json() == b.to_json()


def test_robustness_needs_control(ppp_table):
    setup = SimulationSetup(nodes_per_bin=100)
    with pytest.raises(ConfigError, match="control"):
        robustness_study(4096, 10, setup, ppp_table, {"tau_abs": 2.0}, scenarios=DEFAULT_SCENARIOS[1:])
    with pytest.raises(ConfigError):
        robustness_study(4096, 10, setup, ppp_table, {})
    with pytest.raises(ConfigError):
        JumpScenario("many", x_jumps=1000).apply(None, setup.grids(4096), 0, 0)


def test_laplace_table_format():
    rows = laplace_match_table(MCConfig(replications=1000, time_grid=1000, seed=1), points=((0.0, 1.0, 1.0),))
    text = rows_to_csv(rows)
    assert text.splitlines()[0] == "x,theta,s,closed_form,monte_carlo,std_error,z"
    assert abs(rows[0]["z"]) < 5
