"""End-to-end workflows: day-wise quote estimation and simulation studies.

Simulation studies use the point-process model with bin minima drawn from
their exact conditional law given an Euler path (see
:func:`~boundary_vol.observations.sample_bin_minima_direct`). Every
replication is keyed by ``(seed, n, replication)``, so results do not
depend on the thread count.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy import stats

from .airy import ZetaParams, airy_ai, airy_ai_prime, airy_integral_AI, scorer_gi, scorer_gi_prime, zeta
from .errors import ConfigError, DataError
from .estimator import EstimatorConfig, IVEstimate, estimate_iv
from .excursion import MCConfig, mc_double_laplace
from .grids import Grids, resolve_grids
from .observations import NoiseSpec, RegressionObservations, extract_bin_minima, sample_bin_minima_direct
from .paths import PathConfig, VolModel, inject_jumps, inject_sigma_jump, simulate_ito
from .psi import PsiTable, calibrate_psi_regression
from .quotes import QuoteSeries
from .rng import generator

MIN_RATE_POINTS = 4
MIN_REPLICATIONS = 100


def _dumps(doc) -> str:
    return json.dumps(doc, sort_keys=True, indent=1)


def _derived_seed(seed: int, *key: int) -> int:
    return int(np.random.SeedSequence([int(seed), *map(int, key)]).generate_state(1, np.uint64)[0])


def _parallel(fn: Callable[[int], object], count: int, threads: int) -> list:
    if threads <= 1:
        return [fn(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(count)))


# -- quote data -----------------------------------------------------------------

def side_observations(quotes: QuoteSeries, side: str, lam: float) -> RegressionObservations:
    """Observations above a boundary for one side of the book.

    Ask log-prices are used as they are; bid log-prices are negated so the
    bid side also lies above its boundary.
    """
    values = quotes.side_values(side)
    y = values if side == "ask" else -values
    return RegressionObservations(y_values=y, noise_spec=NoiseSpec("exponential", lam))


def day_grids(quotes: QuoteSeries, side: str, cfg: EstimatorConfig) -> Grids:
    """Regression layout for one side, with event ``i`` at time ``i / n``.

    Raises
    ------
    DataError
        If the side has too few events for an admissible layout.
    """
    n = len(quotes.side_values(side)) - 1
    try:
        return resolve_grids(n, cfg.lam, cfg.K, cfg.kappa, model="regression")
    except ConfigError as exc:
        raise DataError(f"{quotes.day_id} {side}: insufficient events ({n + 1}): {exc}") from None


def calibrate_day_table(
    quotes: QuoteSeries, side: str, cfg: EstimatorConfig, sigma_sq_grid, mc: MCConfig
) -> PsiTable:
    """Regression table matching the layout of one side of a day."""
    grids = day_grids(quotes, side, cfg)
    return calibrate_psi_regression(
        cfg.K, grids.n_used, sigma_sq_grid, NoiseSpec("exponential", cfg.lam), mc, grids=grids
    )


def estimate_day(quotes: QuoteSeries, side: str, cfg: EstimatorConfig, table: PsiTable) -> IVEstimate:
    """Integrated variance of one day from one side of the book.

    Raises
    ------
    DataError
        If the side has too few events.
    ConfigError
        If ``cfg`` is not a regression config or ``table`` was calibrated
        for another layout.
    """
    if cfg.model != "regression":
        raise ConfigError("quote data use the regression model")
    grids = day_grids(quotes, side, cfg)
    obs = side_observations(quotes, side, cfg.lam)
    minima = extract_bin_minima(obs, grids.h, obs_per_bin=grids.obs_per_bin)
    minima.grids = grids
    est = estimate_iv(minima, cfg, table, grids=grids)
    return replace(est, extra={"day_id": quotes.day_id, "side": side, "events": obs.n + 1})


@dataclass
class RunReport:
    """Per-day ask and bid estimates with provenance."""

    days: list[dict] = field(default_factory=list)
    config: dict = field(default_factory=dict)
    files: list[str] = field(default_factory=list)

    def add_day(self, quotes: QuoteSeries, ask: IVEstimate, bid: IVEstimate) -> None:
        self.days.append({
            "day_id": quotes.day_id,
            "ingest": quotes.summary(),
            "ask": ask.to_dict(),
            "bid": bid.to_dict(),
            "truncated": {"ask": bool(ask.truncated_blocks), "bid": bool(bid.truncated_blocks)},
            "clamped": {"ask": bool(ask.clamped_blocks), "bid": bool(bid.clamped_blocks)},
        })

    def to_dict(self) -> dict:
        return {"days": self.days, "config": self.config, "files": self.files}

    def to_json(self) -> str:
        return _dumps(self.to_dict())


# -- simulation studies -----------------------------------------------------------

@dataclass(frozen=True)
class SimulationSetup:
    """Constant-volatility point-process simulation.

    ``nodes_per_bin`` path nodes per bin (at least 100) resolve the
    boundary inside a bin.
    """

    K: float = 31.6
    kappa: float = 2.0
    lam: float = 1.0
    sigma0: float = 1.0
    nodes_per_bin: int = 200
    seed: int = 0
    threads: int = 1

    def grids(self, n: int) -> Grids:
        return resolve_grids(n, self.lam, self.K, self.kappa)

    def estimator(self, **overrides) -> EstimatorConfig:
        return EstimatorConfig(K=self.K, kappa=self.kappa, lam=self.lam, **overrides)

    def path(self, n: int, grids: Grids, replication: int):
        cfg = PathConfig(
            grid_points=grids.bins * self.nodes_per_bin,
            vol_model=VolModel(sigma0=self.sigma0),
            seed=_derived_seed(self.seed, 1, n),
        )
        return simulate_ito(cfg, replication=replication)

    def minima(self, path, n: int, grids: Grids, replication: int):
        mm = sample_bin_minima_direct(
            path, n, self.lam, grids.h, seed=_derived_seed(self.seed, 2, n), replication=replication
        )
        mm.grids = grids
        return mm

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("threads")
        return d


def _rmse(errors) -> float:
    return float(np.sqrt(np.mean(np.square(errors))))


@dataclass(frozen=True)
class RateReport:
    """Per-``n`` error summary and the fitted log-log slope."""

    rows: list[dict]
    slope: float
    slope_se: float
    intercept: float
    replications: int
    setup: dict
    table_id: str
    files: tuple[str, ...] = ()

    @property
    def monotone(self) -> bool:
        r = [row["rmse"] for row in self.rows]
        return all(b < a for a, b in zip(r, r[1:]))

    def to_dict(self) -> dict:
        return {
            "rows": self.rows, "slope": self.slope, "slope_se": self.slope_se,
            "intercept": self.intercept, "monotone": self.monotone,
            "replications": self.replications, "setup": self.setup,
            "table_id": self.table_id, "files": list(self.files),
        }

    def to_json(self) -> str:
        return _dumps(self.to_dict())


def _write_rows(path: Path, rows: list[dict]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        for row in rows:
            w.writerow({k: repr(float(v)) if isinstance(v, (float, np.floating)) else v for k, v in row.items()})


def _save_figure(fig, path: Path) -> None:
    # no software/date metadata so reruns are byte-identical
    fig.savefig(path, dpi=100, metadata={"Software": None})


def rate_errors(n: int, replications: int, setup: SimulationSetup, table: PsiTable) -> np.ndarray:
    """Estimation errors ``IV_hat - IV`` over replications at one ``n``."""
    grids = setup.grids(n)
    cfg = setup.estimator()

    def one(r: int) -> float:
        path = setup.path(n, grids, r)
        est = estimate_iv(setup.minima(path, n, grids, r), cfg, table, grids=grids)
        return est.iv - path.integrated_variance()

    return np.asarray(_parallel(one, replications, setup.threads))


def rate_study(
    n_values: Sequence[int],
    replications: int,
    setup: SimulationSetup,
    table: PsiTable,
    out_dir: str | Path | None = None,
) -> RateReport:
    """RMSE against simulated truth over ``n`` and the slope of log RMSE on log n.

    Writes ``rate_study.csv``, ``rate_study.png`` and ``rate_study.json``
    to ``out_dir`` when given.

    Raises
    ------
    ConfigError
        With fewer than 4 values of ``n`` or fewer than 100 replications.
    """
    n_values = sorted(int(n) for n in n_values)
    if len(set(n_values)) < MIN_RATE_POINTS:
        raise ConfigError(f"need at least {MIN_RATE_POINTS} distinct values of n for a slope fit")
    if replications < MIN_REPLICATIONS:
        raise ConfigError(f"need at least {MIN_REPLICATIONS} replications per n")
    rows = []
    for n in n_values:
        g = setup.grids(n)
        err = rate_errors(n, replications, setup, table)
        rows.append({
            "n": n, "bins": g.bins, "bins_per_block": g.bins_per_block, "blocks": g.blocks,
            "k_eff": g.k_eff, "bias": float(err.mean()),
            "sd": float(err.std(ddof=1)), "rmse": _rmse(err),
        })
    fit = stats.linregress(np.log(n_values), np.log([r["rmse"] for r in rows]))
    report = RateReport(
        rows=rows, slope=float(fit.slope), slope_se=float(fit.stderr),
        intercept=float(fit.intercept), replications=int(replications),
        setup=setup.to_dict(), table_id=table.table_id,
    )
    if out_dir is None:
        return report
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_rows(out / "rate_study.csv", rows)
    _plot_rate(report, out / "rate_study.png")
    files = tuple(str(out / f) for f in ("rate_study.csv", "rate_study.png", "rate_study.json"))
    report = replace(report, files=files)
    (out / "rate_study.json").write_text(report.to_json())
    return report


def _plot_rate(report: RateReport, path: Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    n = np.array([r["n"] for r in report.rows], dtype=float)
    rmse = np.array([r["rmse"] for r in report.rows])
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.loglog(n, rmse, "o", label="RMSE")
    ax.loglog(n, np.exp(report.intercept) * n**report.slope, "-",
              label=f"fit, slope {report.slope:.3f} ± {report.slope_se:.3f}")
    ax.loglog(n, rmse[0] * (n / n[0]) ** (-1.0 / 3.0), "--", label="slope -1/3")
    ax.set_xlabel("n")
    ax.set_ylabel("RMSE of integrated variance")
    ax.legend()
    fig.tight_layout()
    _save_figure(fig, path)
    plt.close(fig)


@dataclass(frozen=True)
class JumpScenario:
    """Jumps added to every replication of a study.

    ``x_jumps`` price jumps of size ``x_jump_size * sqrt(h)`` fall at
    uniform times inside distinct, uniformly chosen blocks; a volatility
    jump of ``sigma_jump_size`` is placed at ``sigma_jump_time``.
    """

    name: str
    x_jumps: int = 0
    x_jump_size: float = 5.0
    sigma_jump_time: float | None = None
    sigma_jump_size: float = 0.0

    @property
    def is_control(self) -> bool:
        return self.x_jumps == 0 and self.sigma_jump_time is None

    def apply(self, path, grids: Grids, seed: int, replication: int):
        if self.x_jumps:
            if self.x_jumps > grids.blocks:
                raise ConfigError("more price jumps than blocks")
            rng = generator(seed, "jump_times", self.name, replication)
            chosen = rng.choice(grids.blocks, self.x_jumps, replace=False)
            times = (chosen + rng.random(self.x_jumps)) * grids.block_length
            path = inject_jumps(path, times, self.x_jump_size * math.sqrt(grids.h))
        if self.sigma_jump_time is not None:
            path = inject_sigma_jump(path, self.sigma_jump_time, self.sigma_jump_size)
        return path


DEFAULT_SCENARIOS = (
    JumpScenario("none"),
    JumpScenario("x_jumps", x_jumps=2, x_jump_size=5.0),
    JumpScenario("sigma_jump", sigma_jump_time=0.5, sigma_jump_size=2.0),
)


@dataclass(frozen=True)
class RobustnessReport:
    """Paired truncated and untruncated errors per scenario.

    Ratios are RMSEs divided by the untruncated RMSE of the control
    scenario (no jumps).
    """

    rows: list[dict]
    n: int
    replications: int
    truncation: dict
    setup: dict
    table_id: str
    files: tuple[str, ...] = ()

    def row(self, name: str) -> dict:
        for r in self.rows:
            if r["scenario"] == name:
                return r
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {"rows": self.rows, "n": self.n, "replications": self.replications,
                "truncation": self.truncation, "setup": self.setup,
                "table_id": self.table_id, "files": list(self.files)}

    def to_json(self) -> str:
        return _dumps(self.to_dict())


def robustness_study(
    n: int,
    replications: int,
    setup: SimulationSetup,
    table: PsiTable,
    truncation: dict,
    scenarios: Sequence[JumpScenario] = DEFAULT_SCENARIOS,
    out_dir: str | Path | None = None,
) -> RobustnessReport:
    """Truncated versus untruncated estimation on shared paths and noise.

    Parameters
    ----------
    truncation : dict
        Estimator keywords for the truncated run, for example
        ``{"tau_abs": 2.0}`` or ``{"tau_adaptive": True, "tau_scale": "block"}``.
    scenarios : sequence of JumpScenario
        Must include a control without jumps.
    """
    scenarios = list(scenarios)
    controls = [s for s in scenarios if s.is_control]
    if not controls:
        raise ConfigError("scenarios need a control without jumps")
    if len({s.name for s in scenarios}) != len(scenarios):
        raise ConfigError("scenario names must be unique")
    grids = setup.grids(n)
    raw_cfg = setup.estimator()
    cut_cfg = setup.estimator(**truncation)
    if cut_cfg.tau_abs is None and not cut_cfg.tau_adaptive:
        raise ConfigError("truncation must set tau_abs or tau_adaptive")

    def one(r: int):
        base = setup.path(n, grids, r)
        out = []
        for sc in scenarios:
            path = sc.apply(base, grids, setup.seed, r)
            mm = setup.minima(path, n, grids, r)
            truth = path.integrated_variance()
            raw = estimate_iv(mm, raw_cfg, table, grids=grids)
            cut = estimate_iv(mm, cut_cfg, table, grids=grids)
            out.append((raw.iv - truth, cut.iv - truth, len(cut.truncated_blocks)))
        return out

    res = np.asarray(_parallel(one, replications, setup.threads), dtype=float)
    base = _rmse(res[:, scenarios.index(controls[0]), 0])
    rows = []
    for j, sc in enumerate(scenarios):
        raw, cut, hits = res[:, j, 0], res[:, j, 1], res[:, j, 2]
        diff = cut - raw
        rows.append({
            "scenario": sc.name,
            "rmse_untruncated": _rmse(raw),
            "rmse_truncated": _rmse(cut),
            "ratio_untruncated": _rmse(raw) / base,
            "ratio_truncated": _rmse(cut) / base,
            "mean_error_untruncated": float(raw.mean()),
            "se_error_untruncated": float(raw.std(ddof=1) / math.sqrt(len(raw))),
            "mean_difference": float(diff.mean()),
            "truncated_blocks_per_rep": float(hits.mean()),
        })
    report = RobustnessReport(
        rows=rows, n=int(n), replications=int(replications), truncation=dict(truncation),
        setup=setup.to_dict(), table_id=table.table_id,
    )
    if out_dir is None:
        return report
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_rows(out / "robustness_study.csv", rows)
    files = (str(out / "robustness_study.csv"), str(out / "robustness_study.json"))
    report = replace(report, files=files)
    (out / "robustness_study.json").write_text(report.to_json())
    return report


# -- analytic oracle ----------------------------------------------------------------

ORACLE_POINTS = ((0.0, 1.0, 1.0), (0.5, 1.0, 2.0), (-0.5, 2.0, 1.0))


def wronskian_table(points: int = 50, lo: float = -5.0, hi: float = 10.0) -> list[dict]:
    """``pi (Gi' Ai - Ai' Gi)`` against ``AI`` on a uniform grid."""
    rows = []
    for x in np.linspace(lo, hi, points):
        x = float(x)
        lhs = math.pi * (scorer_gi_prime(x) * airy_ai(x) - airy_ai_prime(x) * scorer_gi(x))
        rhs = airy_integral_AI(x)
        rows.append({"x": x, "wronskian": float(lhs), "AI": float(rhs), "abs_error": float(abs(lhs - rhs))})
    return rows


def laplace_match_table(cfg: MCConfig, points=ORACLE_POINTS) -> list[dict]:
    """Closed-form kernel against the Monte Carlo double Laplace transform.

    Each row compares ``theta^{-2/3} zeta_s(x, theta)`` with the estimate
    of ``int e^{-st} E exp(-sqrt(2) theta int_0^t (x + W)_+) dt``.
    """
    rows = []
    for x, theta, s in points:
        exact = theta ** (-2.0 / 3.0) * zeta(ZetaParams(s=s, x=x, theta=theta))
        mc = mc_double_laplace(x, math.sqrt(2.0) * theta, s, cfg)
        rows.append({"x": x, "theta": theta, "s": s, "closed_form": exact,
                     "monte_carlo": mc.value, "std_error": mc.std_error,
                     "z": (mc.value - exact) / mc.std_error})
    return rows


def rows_to_csv(rows: list[dict]) -> str:
    """CSV text with a header line; floats written with full precision."""
    head = list(rows[0])
    lines = [",".join(head)]
    for r in rows:
        lines.append(",".join(repr(float(r[k])) if isinstance(r[k], (float, np.floating)) else str(r[k]) for k in head))
    return "\n".join(lines) + "\n"

