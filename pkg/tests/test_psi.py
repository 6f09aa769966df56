import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from boundary_vol.errors import CalibrationError, ConfigError, DomainError
from boundary_vol.excursion import MCConfig
from boundary_vol.grids import resolve_grids
from boundary_vol.observations import NoiseSpec
from boundary_vol.psi import (
    PsiTable,
    b_constants,
    calibrate_psi_regression,
    default_grid,
    invert_psi,
    psi_slope,
    two_bin_ppp,
    two_bin_regression,
)

from conftest import joint_z

CFG = MCConfig(replications=20000, time_grid=1000, seed=3)
EXP_NOISE = NoiseSpec("exponential", 1.0)


def test_default_grid():
    g = default_grid(0.1, 10.0, 10)
    assert g[0] == pytest.approx(0.1) and g[-1] == pytest.approx(10.0) and len(g) == 21
    with pytest.raises(ConfigError):
        default_grid(1.0, 1.0)


def test_table_nearly_linear_over_moderate_range(ppp_table):
    mask = (ppp_table.sigma_sq_grid >= 1) & (ppp_table.sigma_sq_grid <= 10)
    r = np.corrcoef(ppp_table.sigma_sq_grid[mask], ppp_table.psi_values[mask])[0, 1]
    assert r**2 >= 0.99


def test_non_increasing_values_rejected():
    with pytest.raises(CalibrationError, match="not increasing"):
        PsiTable(K=1.0, sigma_sq_grid=[1.0, 2.0, 3.0], psi_values=[1.0, 2.0, 1.5], std_errors=[0.1] * 3)
    with pytest.raises(CalibrationError):
        PsiTable(K=1.0, sigma_sq_grid=[1.0, 2.0], psi_values=[0.0, 1.0], std_errors=[0.1] * 2)
    with pytest.raises(ConfigError):
        PsiTable(K=1.0, sigma_sq_grid=[2.0, 1.0], psi_values=[1.0, 2.0], std_errors=[0.1] * 2)


def test_large_k_is_nearly_proportional():
    v, _ = two_bin_ppp(1e3, [1.0, 2.0], CFG).psi()
    assert v[1] / v[0] == pytest.approx(4.0, abs=0.1)


def test_noise_only_regression_value():
    g = resolve_grids(100000, 1.0, 31.6, 2.0, model="regression")
    v, e = two_bin_regression(g.obs_per_bin, g.h, [0.0], EXP_NOISE, CFG).psi()
    # difference of two independent Exp(lam N) minima, in units of sqrt(h)
    exact = 2.0 / (g.obs_per_bin**2 * g.h)
    assert abs(v[0] - exact) <= 3 * e[0]


def test_regression_approaches_point_process():
    g = resolve_grids(100000, 1.0, 31.6, 2.0, model="regression")
    reg, _ = two_bin_regression(g.obs_per_bin, g.h, [1.0], EXP_NOISE, CFG).psi()
    ppp, _ = two_bin_ppp(g.k_eff, [1.0], MCConfig(replications=20000, time_grid=1000, seed=4)).psi()
    assert reg[0] == pytest.approx(ppp[0], rel=0.1)


def test_regression_table_records_layout():
    t = calibrate_psi_regression(31.6, 100000, [0.5, 1.0, 2.0], EXP_NOISE,
                                 MCConfig(replications=2000, time_grid=1000, seed=1), kappa=2.0)
    g = resolve_grids(100000, 1.0, 31.6, 2.0, model="regression")
    assert (t.bins, t.obs_per_bin, t.n) == (g.bins, g.obs_per_bin, g.n_used)
    with pytest.raises(ConfigError):
        t.psi(1.0, k_eff=40.0)


def test_inversion_identity(ppp_table):
    for s2 in (0.05, 0.3, 1.0, 4.0, 30.0):
        inv = invert_psi(ppp_table, ppp_table.psi(s2))
        assert inv.sigma_sq == pytest.approx(s2, rel=1e-10) and not inv.clamped


def test_inversion_clamps(ppp_table):
    lo, hi = ppp_table.psi_range
    low = ppp_table.invert(lo / 2)
    high = ppp_table.invert(hi * 2)
    assert low.clamped and low.sigma_sq == ppp_table.sigma_sq_grid[0]
    assert high.clamped and high.sigma_sq == ppp_table.sigma_sq_grid[-1]
    with pytest.raises(DomainError):
        ppp_table.psi(100.0)


def test_forward_inverse_round_trip(ppp_table):
    lo, hi = ppp_table.psi_range
    for v in np.geomspace(lo * 1.0001, hi * 0.9999, 100):
        assert ppp_table.psi(ppp_table.invert(v).sigma_sq) == pytest.approx(v, abs=1e-6 * (1 + v))


@settings(max_examples=200, deadline=None)
@given(st.floats(min_value=0.0, max_value=1.0), st.floats(min_value=10.0, max_value=100.0))
def test_round_trip_under_rescaling(frac, k_eff):
    table = _small_table()
    f = (k_eff / table.K) ** 2
    lo, hi = table.psi_range
    v = (lo + frac * (hi - lo)) / f
    inv = table.invert(v, k_eff)
    assert table.psi(inv.sigma_sq, k_eff) == pytest.approx(v, abs=1e-6 * (1 + v))


_CACHE = {}


def _small_table():
    if "t" not in _CACHE:
        grid = default_grid(0.05, 20.0, 10)
        _CACHE["t"] = PsiTable(K=31.6, sigma_sq_grid=grid, psi_values=0.75 * grid**1.02, std_errors=0 * grid)
    return _CACHE["t"]


def test_rescaled_table_matches_direct_simulation(ppp_table):
    k2 = 63.2
    i = int(np.argmin(np.abs(ppp_table.sigma_sq_grid - 4.0)))
    s2 = ppp_table.sigma_sq_grid[i] / 4.0  # maps exactly onto a grid node
    from_table = ppp_table.psi(s2, k2)
    se = ppp_table.std_errors[i] / 4.0
    d = two_bin_ppp(k2, [math.sqrt(s2)], MCConfig(replications=20000, time_grid=1000, seed=77)).psi()
    assert abs(from_table - d[0][0]) <= 3 * math.hypot(se, d[1][0])


def test_json_round_trip_and_id(ppp_table, tmp_path):
    p = tmp_path / "table.json"
    ppp_table.save(p)
    doc = json.loads(p.read_text())
    assert {"model", "K", "grid", "values", "std_errors", "mc_config"} <= set(doc)
    again = PsiTable.load(p)
    assert again.table_id == ppp_table.table_id
    assert again.psi(1.0) == ppp_table.psi(1.0)
    with pytest.raises(ConfigError, match="missing field"):
        PsiTable.from_dict({"K": 1.0})


def test_variance_form_agrees(ppp_table):
    vf = ppp_table.variance_form
    assert np.all(np.abs(vf - ppp_table.psi_values) <= 4 * ppp_table.std_errors)


def test_two_point_maximum_constants():
    b = b_constants(2, MCConfig(replications=100000, time_grid=1000, seed=5))
    # M = max(0, W_{1/2}): E[M^2]/2 = 1/8, E[M] = sqrt(1/2) / sqrt(2 pi)
    assert abs(b.b1.value - 0.125) <= 3 * b.b1.std_error
    assert abs(b.b2.value - 0.5 / math.sqrt(math.pi)) <= 3 * b.b2.std_error
    with pytest.raises(ConfigError):
        b_constants(1, CFG)


def test_constants_increase_with_points():
    cfg = MCConfig(replications=4000, time_grid=1000, seed=6)
    small, large = b_constants(100, cfg), b_constants(10000, cfg)
    assert small.b1.value < large.b1.value <= 0.5 + 3 * large.b1.std_error
    assert small.b2.value < large.b2.value <= math.sqrt(2 / math.pi) + 3 * large.b2.std_error


def test_psi_slope_positive():
    s = psi_slope(31.6, 1.0, MCConfig(replications=4000, time_grid=1000, seed=2))
    assert s.value > 0 and s.std_error < 0.1 * s.value
    with pytest.raises(ConfigError):
        psi_slope(31.6, 0.01, CFG)
