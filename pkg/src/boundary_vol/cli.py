"""Command-line entry point ``boundary-vol``.

Every subcommand accepts ``--seed``, ``--threads`` and ``--config FILE``.
The config file (YAML or JSON) holds option values keyed by their long
names with dashes or underscores; top-level keys apply to every
subcommand that has the option and a section named after a subcommand
overrides them.
Explicit command-line flags win over the file.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .errors import BoundaryVolError, ConfigError
from .estimator import EstimatorConfig, estimate_iv, estimate_iv_parametric
from .excursion import MCConfig
from .grids import resolve_grids
from .observations import (
    NoiseSpec,
    PPPObservations,
    RegressionObservations,
    extract_bin_minima,
    sample_ppp,
    sample_regression,
)
from .paths import path_config_from_dict, simulate_ito
from .psi import PsiTable, calibrate_psi_ppp, calibrate_psi_regression
from .quotes import QuoteSchema, ingest_quotes_csv
from .studies import (
    JumpScenario,
    RunReport,
    SimulationSetup,
    calibrate_day_table,
    estimate_day,
    laplace_match_table,
    rate_study,
    robustness_study,
    rows_to_csv,
    wronskian_table,
)


def _load_mapping(path: str | None) -> dict:
    if not path:
        return {}
    text = Path(path).read_text()
    doc = json.loads(text) if path.endswith(".json") else yaml.safe_load(text)
    if doc is None:
        return {}
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: expected a mapping at the top level")
    return doc


def _emit(text: str, output: str | None) -> None:
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _psi_grid(args) -> np.ndarray:
    if not 0 < args.grid_min < args.grid_max or args.points < 2:
        raise ConfigError("need 0 < grid-min < grid-max and points >= 2")
    return np.geomspace(args.grid_min, args.grid_max, args.points)


def _mc(args) -> MCConfig:
    return MCConfig(replications=args.reps, time_grid=args.time_grid, seed=args.seed,
                    antithetic=False, threads=args.threads)


def _estimator_config(args, model: str) -> EstimatorConfig:
    return EstimatorConfig(
        K=args.k, kappa=args.kappa, lam=args.lam, model=model,
        tau_abs=args.tau_abs, tau_adaptive=args.tau_adaptive, tau_scale=args.tau_scale,
        allow_empty_bins=getattr(args, "allow_empty_bins", False),
        psi_table_ref=getattr(args, "psi_table", None),
    )


def _ppp_table(args) -> PsiTable:
    if args.psi_table:
        return PsiTable.load(args.psi_table)
    return calibrate_psi_ppp(args.k, _psi_grid(args), _mc(args))


# -- subcommands -------------------------------------------------------------------

def cmd_ingest(args) -> None:
    schema = QuoteSchema.from_dict(args.schema_doc)
    out = []
    for path in args.input:
        q = ingest_quotes_csv(path, schema)
        out.append(q.summary())
    _emit(json.dumps(out, sort_keys=True, indent=1), args.output)


def cmd_estimate_day(args) -> None:
    schema = QuoteSchema.from_dict(args.schema_doc)
    cfg = _estimator_config(args, "regression")
    report = RunReport(config={
        "estimator": cfg.to_dict(), "schema": args.schema_doc, "seed": args.seed,
        "calibration": {"reps": args.reps, "grid_min": args.grid_min, "grid_max": args.grid_max,
                        "points": args.points},
        "inputs": [str(p) for p in args.input],
    })
    for path in args.input:
        quotes = ingest_quotes_csv(path, schema)
        sides = {}
        for side in ("ask", "bid"):
            table = (PsiTable.load(args.psi_table) if args.psi_table
                     else calibrate_day_table(quotes, side, cfg, _psi_grid(args), _mc(args)))
            sides[side] = estimate_day(quotes, side, cfg, table)
        report.add_day(quotes, sides["ask"], sides["bid"])
    if args.output:
        report.files.append(str(args.output))
    _emit(report.to_json(), args.output)


def cmd_estimate(args) -> None:
    if args.model == "ppp":
        if args.n is None:
            raise ConfigError("--n is required for point-process observations")
        obs = PPPObservations.from_csv(args.input, args.n, args.lam)
        n = args.n
    else:
        obs = RegressionObservations.from_csv(args.input, NoiseSpec("exponential", args.lam))
        n = obs.n
    cfg = _estimator_config(args, args.model)
    grids = resolve_grids(n, args.lam, args.k, args.kappa, model=args.model)
    if args.psi_table:
        table = PsiTable.load(args.psi_table)
    elif args.model == "ppp":
        table = _ppp_table(args)
    else:
        table = calibrate_psi_regression(args.k, n, _psi_grid(args), NoiseSpec("exponential", args.lam),
                                         _mc(args), grids=grids)
    minima = extract_bin_minima(obs, grids.h, obs_per_bin=grids.obs_per_bin)
    minima.grids = grids
    fn = estimate_iv_parametric if args.parametric else estimate_iv
    _emit(fn(minima, cfg, table, grids=grids).to_json(), args.output)


def cmd_simulate(args) -> None:
    doc = _load_mapping(args.path_config) if args.path_config else {}
    grids = resolve_grids(args.n, args.lam, args.k, args.kappa, model=args.model)
    if args.model == "ppp":
        doc.setdefault("grid_points", grids.bins * args.nodes_per_bin)
    else:
        doc.setdefault("grid_points", int(args.n))
    doc.setdefault("seed", args.seed)
    path = simulate_ito(path_config_from_dict(doc), replication=args.replication)
    if args.model == "ppp":
        # band height is (c / K) sqrt(h); c = 10 K spans ten bin-scale ranges
        c = args.band_multiplier or max(50.0, 10.0 * args.k)
        obs = sample_ppp(path, args.n, args.lam, grids.h, band_multiplier=c,
                         seed=args.seed, replication=args.replication)
    else:
        obs = sample_regression(path, int(args.n), NoiseSpec("exponential", args.lam),
                                seed=args.seed, replication=args.replication)
    obs.to_csv(args.output)
    if args.path_output:
        path.to_csv(args.path_output)
    sys.stdout.write(json.dumps({"observations": args.output, "integrated_variance": path.integrated_variance(),
                                 "path_id": path.path_id}, sort_keys=True) + "\n")


def _setup(args) -> SimulationSetup:
    return SimulationSetup(K=args.k, kappa=args.kappa, lam=args.lam, sigma0=args.sigma0,
                           nodes_per_bin=args.nodes_per_bin, seed=args.seed, threads=args.threads)


def cmd_rate_study(args) -> None:
    report = rate_study(args.n_values, args.study_reps, _setup(args), _ppp_table(args), args.out_dir)
    sys.stdout.write(report.to_json() + "\n")


def cmd_robustness_study(args) -> None:
    truncation = {"tau_abs": args.tau_abs} if args.tau_abs is not None else {
        "tau_adaptive": True, "tau_scale": args.tau_scale}
    scenarios = [
        JumpScenario("none"),
        JumpScenario("x_jumps", x_jumps=args.jumps, x_jump_size=args.jump_size),
        JumpScenario("sigma_jump", sigma_jump_time=args.sigma_jump_time, sigma_jump_size=args.sigma_jump_size),
    ]
    report = robustness_study(args.n, args.study_reps, _setup(args), _ppp_table(args), truncation,
                              scenarios, args.out_dir)
    sys.stdout.write(report.to_json() + "\n")


def cmd_calibrate_psi(args) -> None:
    mc = _mc(args)
    if args.model == "ppp":
        table = calibrate_psi_ppp(args.k, _psi_grid(args), mc)
    else:
        if args.n is None:
            raise ConfigError("--n is required for a regression table")
        noise = NoiseSpec(args.noise, args.lam)
        table = calibrate_psi_regression(args.k, args.n, _psi_grid(args), noise, mc, kappa=args.kappa)
    _emit(table.to_json(), args.output)


def cmd_oracle_check(args) -> None:
    text = rows_to_csv(wronskian_table(args.wronskian_points))
    if args.reps > 0:
        text += "\n" + rows_to_csv(laplace_match_table(_mc(args)))
    _emit(text, args.output)


# -- parser ------------------------------------------------------------------------

def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--config", help="YAML or JSON file with option values")


def _add_model(p) -> None:
    p.add_argument("--k", type=float, default=31.6, help="bin constant K")
    p.add_argument("--kappa", type=float, default=2.0, help="block constant")
    p.add_argument("--lambda", dest="lam", type=float, default=1.0, help="observation rate")


def _add_tau(p) -> None:
    g = p.add_mutually_exclusive_group()
    g.add_argument("--tau-abs", type=float, default=None, help="cap on block sigma^2")
    g.add_argument("--tau-adaptive", action="store_true", help="cap from an untruncated first pass")
    p.add_argument("--tau-scale", choices=("bin", "block"), default="bin")


def _add_calibration(p, reps: int = 20000, time_grid: int = 1000,
                     grid: tuple[float, float, int] = (0.02, 50.0, 69)) -> None:
    p.add_argument("--psi-table", default=None, help="calibrated table (JSON); calibrated on the fly if absent")
    p.add_argument("--reps", type=int, default=reps, help="calibration replications")
    p.add_argument("--time-grid", type=int, default=time_grid, help="path nodes per unit bin")
    p.add_argument("--grid-min", type=float, default=grid[0])
    p.add_argument("--grid-max", type=float, default=grid[1])
    p.add_argument("--points", type=int, default=grid[2])


def _add_study(p) -> None:
    p.add_argument("--study-reps", type=int, default=200, help="replications per n")
    p.add_argument("--sigma0", type=float, default=1.0)
    p.add_argument("--nodes-per-bin", type=int, default=200)
    p.add_argument("--out-dir", default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="boundary-vol", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate quote files and print ingestion counts")
    _add_common(p)
    p.add_argument("--input", nargs="+", required=True)
    p.add_argument("--schema", default=None, help="column map (YAML or JSON)")
    p.add_argument("--output", default=None)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("estimate-day", help="ask and bid integrated variance per quote file")
    _add_common(p)
    _add_model(p)
    _add_tau(p)
    _add_calibration(p, reps=5000)
    p.add_argument("--input", nargs="+", required=True)
    p.add_argument("--schema", default=None)
    p.add_argument("--output", default=None)
    p.set_defaults(func=cmd_estimate_day)

    p = sub.add_parser("estimate", help="integrated variance from an observation CSV")
    _add_common(p)
    p.add_argument("--model", choices=("ppp", "regression"), default="ppp")
    _add_model(p)
    _add_tau(p)
    _add_calibration(p)
    p.add_argument("--n", type=float, default=None, help="intensity multiplier of point-process data")
    p.add_argument("--allow-empty-bins", action="store_true")
    p.add_argument("--parametric", action="store_true", help="one global inversion")
    p.add_argument("--input", required=True)
    p.add_argument("--output", default=None)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("simulate", help="write simulated observations as CSV")
    _add_common(p)
    p.add_argument("--model", choices=("ppp", "regression"), default="ppp")
    _add_model(p)
    p.add_argument("--n", type=float, required=True)
    p.add_argument("--nodes-per-bin", type=int, default=200)
    p.add_argument("--path-config", default=None, help="path model (YAML or JSON)")
    p.add_argument("--band-multiplier", type=float, default=None,
                   help="point-process band height in units of 1/(n lambda h); default max(50, 10 K)")
    p.add_argument("--replication", type=int, default=0)
    p.add_argument("--output", required=True)
    p.add_argument("--path-output", default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("rate-study", help="RMSE versus n and the fitted log-log slope")
    _add_common(p)
    _add_model(p)
    _add_calibration(p)
    _add_study(p)
    p.add_argument("--n-values", type=int, nargs="+",
                   default=[2**12, 2**13, 2**14, 2**15, 2**16, 2**17])
    p.set_defaults(func=cmd_rate_study)

    p = sub.add_parser("robustness-study", help="truncated versus untruncated errors under jumps")
    _add_common(p)
    _add_model(p)
    _add_calibration(p)
    _add_study(p)
    p.add_argument("--tau-abs", type=float, default=2.0)
    p.add_argument("--tau-adaptive", action="store_true",
                   help="use the adaptive cap instead of --tau-abs")
    p.add_argument("--tau-scale", choices=("bin", "block"), default="bin")
    p.add_argument("--n", type=int, default=4096)
    p.add_argument("--jumps", type=int, default=2)
    p.add_argument("--jump-size", type=float, default=5.0, help="in units of sqrt(h)")
    p.add_argument("--sigma-jump-time", type=float, default=0.5)
    p.add_argument("--sigma-jump-size", type=float, default=2.0)
    p.set_defaults(func=cmd_robustness_study)

    p = sub.add_parser("calibrate-psi", help="tabulate the moment function")
    _add_common(p)
    p.add_argument("--model", choices=("ppp", "regression"), default="ppp")
    _add_model(p)
    p.add_argument("--n", type=int, default=None, help="observations (regression tables)")
    p.add_argument("--noise", choices=("exponential", "uniform"), default="exponential")
    p.add_argument("--reps", type=int, default=20000)
    p.add_argument("--time-grid", type=int, default=1000)
    p.add_argument("--grid-min", type=float, default=0.02)
    p.add_argument("--grid-max", type=float, default=50.0)
    p.add_argument("--points", type=int, default=69)
    p.add_argument("--output", default=None)
    p.set_defaults(func=cmd_calibrate_psi)

    p = sub.add_parser("oracle-check", help="special-function identities and Monte Carlo match as CSV")
    _add_common(p)
    p.add_argument("--wronskian-points", type=int, default=50)
    p.add_argument("--reps", type=int, default=20000, help="0 skips the Monte Carlo table")
    p.add_argument("--time-grid", type=int, default=10000)
    p.add_argument("--output", default=None)
    p.set_defaults(func=cmd_oracle_check)
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> argparse.Namespace:
    args = parser.parse_args(argv)
    doc = _load_mapping(args.config)
    choices = parser._subparsers._group_actions[0].choices
    sub = choices[args.command]
    known = {a.dest for a in sub._actions}

    def normalise(d):
        out = {k.replace("-", "_"): v for k, v in d.items()}
        if "lambda" in out:
            out["lam"] = out.pop("lambda")
        return out

    # top-level keys apply where the subcommand knows them; section keys must all be known
    shared = normalise({k: v for k, v in doc.items() if k not in choices})
    section = normalise(doc.get(args.command, {}) or {})
    all_known = set().union(*({a.dest for a in p._actions} for p in choices.values()))
    unknown = (set(shared) - all_known) | (set(section) - known)
    if unknown:
        raise ConfigError(f"unknown config keys for {args.command}: {sorted(unknown)}")
    values = {k: v for k, v in shared.items() if k in known}
    values.update(section)
    schema_doc = values.pop("schema", None)
    if values:
        sub.set_defaults(**values)
        args = parser.parse_args(argv)
    if hasattr(args, "schema"):
        if isinstance(args.schema, str):
            schema_doc = _load_mapping(args.schema)
        args.schema_doc = schema_doc or {}
    return args


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = _apply_config(parser, argv)
        if args.command == "robustness-study" and args.tau_adaptive:
            args.tau_abs = None
        args.func(args)
    except BoundaryVolError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
