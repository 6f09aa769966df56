"""Simulate point-process observations above a stochastic-volatility path and estimate IV."""

import math

from boundary_vol import (
    EstimatorConfig,
    MCConfig,
    PathConfig,
    VolModel,
    calibrate_psi_ppp,
    estimate_iv,
    resolve_grids,
    sample_bin_minima_direct,
    simulate_ito,
)
from boundary_vol.psi import default_grid

n, K, kappa = 2**18, 31.6, 2.0
grids = resolve_grids(n, 1.0, K, kappa)
print(f"{grids.bins} bins of width {grids.h:.2e}, {grids.blocks} blocks, K_eff = {grids.k_eff:.2f}")

vol = VolModel(sigma0=1.0, drift_tilde=lambda t, s, w: -0.1 * math.sin(w),
               sigma_tilde=lambda t, s, w: 0.2 * math.cos(w))
table = calibrate_psi_ppp(K, default_grid(0.02, 50.0, 20), MCConfig(replications=20000, time_grid=1000, seed=3))
cfg = EstimatorConfig(K=K, kappa=kappa, tau_abs=10.0)
for r in range(5):
    path = simulate_ito(PathConfig(grid_points=grids.bins * 200, vol_model=vol, seed=1), replication=r)
    minima = sample_bin_minima_direct(path, n, 1.0, grids.h, seed=2, replication=r)
    est = estimate_iv(minima, cfg, table, grids=grids)
    print(f"day {r}: true IV {path.integrated_variance():.4f}, estimate {est.iv:.4f}")
