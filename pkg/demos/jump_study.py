"""Compare truncated and untruncated estimates when price jumps are added."""

from boundary_vol import MCConfig, SimulationSetup, calibrate_psi_ppp, robustness_study
from boundary_vol.psi import default_grid

table = calibrate_psi_ppp(31.6, default_grid(0.02, 50.0, 20), MCConfig(replications=20000, time_grid=1000, seed=11))
report = robustness_study(4096, 100, SimulationSetup(nodes_per_bin=100, seed=3), table, {"tau_abs": 2.0})
for row in report.rows:
    print(f"{row['scenario']:>11}: untruncated {row['ratio_untruncated']:.2f}x, truncated {row['ratio_truncated']:.2f}x")
