"""Command line front end: single estimates and Monte Carlo sweeps."""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path
from typing import List, Optional

from . import __version__
from .config import build_config, config_snapshot, load_raw, sweep_spec
from .errors import ConfigError, Outage, ShadowcastError
from .harness import derive_trial_seed, run_sweep, run_trial_detailed
from .report import render_figures, write_manifest, write_metrics_csv, write_trials_csv

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_OUTAGE = 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="shadowcast",
        description="Locate a cylindrical obstacle from VLC line-of-sight blockage indicators.",
    )
    parser.add_argument("--version", action="version", version=f"shadowcast {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("config", help="scenario file (.toml or .json)")
    common.add_argument("--seed", type=int, default=None, help="override the master seed")
    common.add_argument(
        "--estimator", choices=["ml", "mmse"], default=None, help="override the estimator"
    )
    common.add_argument(
        "--distance-mode",
        choices=["line", "segment"],
        default=None,
        help="distance used by the likelihood (sensitivity study)",
    )

    est = sub.add_parser("estimate", parents=[common], help="run one scenario and print the estimate")
    est.add_argument("--trial", type=int, default=0, help="trial index used to derive the RNG seed")

    sweep = sub.add_parser("sweep", parents=[common], help="run a Monte Carlo sweep and write reports")
    sweep.add_argument("--trials", type=int, default=None, help="override trials per sweep point")
    sweep.add_argument("--out", default="out", help="output directory (default: ./out)")
    sweep.add_argument("--sweep-var", default=None, help="sweep variable: num_ue | radius | grid_L")
    sweep.add_argument(
        "--sweep-values", default=None, help="comma-separated sweep values, e.g. 5,10,20,40"
    )
    sweep.add_argument("--workers", type=int, default=None, help="worker processes (or SHADOWCAST_THREADS)")
    sweep.add_argument(
        "--no-figures", action="store_true", help="skip figure rendering, write CSVs only"
    )
    return parser


def _load(args) -> tuple:
    raw = load_raw(args.config)
    cfg = build_config(raw)
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError(f"seed: must be >= 0, got {args.seed}")
        cfg = replace(cfg, seed=args.seed)
    if args.estimator is not None:
        cfg = replace(cfg, estimator=args.estimator)
    if args.distance_mode is not None:
        cfg = replace(cfg, distance_mode=args.distance_mode)
    return cfg, raw


def cmd_estimate(args) -> int:
    try:
        cfg, _ = _load(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    seed = derive_trial_seed(cfg.seed, 0, args.trial)
    result, _, sol = run_trial_detailed(cfg, seed)
    print(f"estimator: {cfg.estimator}")
    print(f"trial_seed: {result.seed}")
    print(f"theta_true: ({result.theta_true.x:.4f}, {result.theta_true.y:.4f})")
    print(f"r_true: {result.r_true:.4f}")
    print(f"n_blocked: {result.n_blocked}")
    print(f"n_nonblocked: {result.n_nonblocked}")
    if result.outage:
        print("outage: no blocked links observed, cannot estimate")
        return EXIT_OUTAGE
    print(f"theta_hat: ({result.theta_hat.x:.4f}, {result.theta_hat.y:.4f})")
    print(f"r_hat: {result.r_hat:.4f}")
    if sol is not None:
        print(f"objective: {sol.objective:.6e}")
        print(f"alpha_final: {sol.alpha_final:g}")
        print(f"d_min: {sol.d_min:.4f}")
        print(f"active_set: {list(sol.active_set)}")
        print(f"multipliers: {[float(f'{m:.12g}') for m in sol.multipliers]}")
        print(f"rank_deficient: {sol.rank_deficient}")
        print(f"infeasible_relaxed: {sol.infeasible_relaxed}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    try:
        cfg, raw = _load(args)
        if args.trials is not None:
            if args.trials < 1:
                raise ConfigError(f"trials: must be >= 1, got {args.trials}")
            cfg = replace(cfg, trials=args.trials)
        spec = sweep_spec(raw)
        var = args.sweep_var or (spec[0] if spec else None)
        if args.sweep_values is not None:
            try:
                values = [float(v) for v in args.sweep_values.split(",") if v.strip()]
            except ValueError as exc:
                raise ConfigError(f"sweep.values: {exc}") from exc
        else:
            values = spec[1] if spec else None
        if var is None or not values:
            raise ConfigError("sweep: needs a variable and values (config [sweep] or flags)")
        if var not in ("num_ue", "radius", "grid_L"):
            raise ConfigError(f"sweep.variable: must be num_ue, radius or grid_L, got {var!r}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    snapshot = config_snapshot(cfg, raw)
    snapshot["sweep"] = {"variable": var, "values": values}
    outputs = ["metrics.csv", "trials.csv"]
    if not args.no_figures:
        outputs += ["rmse_theta.png", "rmse_r.png", "outage_prob.png"]
    write_manifest(out_dir, snapshot, cfg.seed, __version__, outputs)

    points = run_sweep(cfg, var, values, workers=args.workers)
    rows = [p.metrics for p in points]
    write_metrics_csv(out_dir / "metrics.csv", rows)
    write_trials_csv(out_dir / "trials.csv", points)
    if not args.no_figures:
        render_figures(out_dir, rows, var)

    header = f"{var:>10} {'trials':>7} {'rmse_theta':>12} {'rmse_r':>12} {'outage':>9}"
    print(header)
    for r in rows:
        print(
            f"{r.sweep_value:>10g} {r.trials:>7d} {r.rmse_theta:>12.5f} "
            f"{r.rmse_r:>12.5f} {r.outage_prob:>9.4f}"
        )
    print(f"wrote {out_dir / 'metrics.csv'} and {out_dir / 'trials.csv'}")
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "estimate":
            return cmd_estimate(args)
        return cmd_sweep(args)
    except Outage:
        print("outage: no blocked links observed", file=sys.stderr)
        return EXIT_OUTAGE
    except ShadowcastError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
