"""Write a LOBSTER-style quote file, ingest it and estimate IV from both sides of the book."""

import math
import tempfile
from pathlib import Path

import numpy as np

from boundary_vol import EstimatorConfig, MCConfig, estimate_day, ingest_quotes_csv
from boundary_vol.psi import default_grid
from boundary_vol.studies import calibrate_day_table

rng = np.random.default_rng(0)
n = 100_000
efficient = math.log(180.0) + 0.01 * np.concatenate(([0.0], np.cumsum(rng.standard_normal(n)) / math.sqrt(n)))
spread = 0.01 * rng.exponential(1.0, (2, n + 1))
seconds = np.sort(rng.uniform(34200, 57600, n + 1))

with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "orderbook.csv"
    with open(path, "w") as fh:
        for t, x, a, b in zip(seconds, efficient, *spread):
            fh.write(f"{t:.9f},{round(math.exp(x + a) * 1e4)},100,{round(math.exp(x - b) * 1e4)},100\n")
    schema = {"time": "time", "ask_price": "ask", "bid_price": "bid", "price_scale": 10000,
              "columns": ["time", "ask", "ask_size", "bid", "bid_size"]}
    quotes = ingest_quotes_csv(path, schema)

print(quotes.summary())
# Event time puts the i-th quote at i / n. The noise rate is in units of 1 / log-price.
# K * sigma should be of order 30, so K comes from a prior volatility level of 1%.
cfg = EstimatorConfig(K=31.6 / 0.01, kappa=2.0, lam=100.0, model="regression")
for side in ("ask", "bid"):
    table = calibrate_day_table(quotes, side, cfg, default_grid(1e-6, 1e-2, 20),
                                MCConfig(replications=4000, time_grid=1000, seed=1))
    est = estimate_day(quotes, side, cfg, table)
    print(f"{side}: IV {est.iv:.3e} (true 1.0e-04), clamped blocks {len(est.clamped_blocks)}")
