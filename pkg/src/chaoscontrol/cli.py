"""Command-line interface.

Subcommands cover the full pipeline: ``simulate`` raw trajectories,
``train``/``predict`` a predictor in isolation, ``control`` a complete
closed-loop experiment, ``metrics`` on any trajectory CSV, ``sweep`` the
data-efficiency grid, and ``snapshot`` of the exact training series.

Exit codes: 0 success, 2 configuration/usage error, 3 numerical
divergence in a single-run mode.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from dataclasses import replace

import numpy as np

from . import esn, ngrc
from .dynamics import Trajectory, random_initial_state, relax_to_attractor, simulate
from .errors import ConfigError, DivergenceError
from .esn import EsnModel
from .experiments import (
    ExperimentConfig,
    SweepSpec,
    config_from_mapping,
    derive_seed_sequence,
    export_training_snapshot,
    load_config_file,
    prepare_trained_model,
    run_single,
    run_sweep,
    write_summary_csv,
    write_trajectory_csv,
)
from .metrics import (
    climate_stats,
    write_gp_diagnostics_csv,
    write_lyapunov_diagnostics_csv,
)
from .modelio import load_model, save_model

__all__ = ["main"]


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", metavar="PATH", help="flat key=value config file")
    parser.add_argument("--seed", type=int, metavar="INT", help="override master seed")
    parser.add_argument("--out", default=".", metavar="DIR", help="output directory")
    parser.add_argument("--jobs", type=int, default=1, metavar="INT", help="worker processes")
    parser.add_argument(
        "--no-timestamp",
        action="store_true",
        help="omit the timestamped header comment for byte-stable output",
    )


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chaosctl",
        description="Closed-loop chaos control experiments on the Lorenz system.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="integrate one regime and write t,x,y,z CSV")
    p.add_argument(
        "--state",
        choices=("train", "plant"),
        default="train",
        help="which parameter regime to integrate",
    )
    p.add_argument("--steps", type=int, help="sampling steps (default: horizon)")
    _add_common(p)

    p = sub.add_parser("train", help="fit the configured predictor, save the model")
    p.add_argument("--kind", choices=("classic", "ngrc"), help="predictor kind override")
    _add_common(p)

    p = sub.add_parser("predict", help="free-run a saved model")
    p.add_argument("--model", required=True, metavar="PATH", help="saved model file")
    p.add_argument("--steps", type=int, help="prediction steps (default: horizon)")
    _add_common(p)

    p = sub.add_parser("control", help="full experiment: train, switch regime, control")
    p.add_argument("--kind", choices=("classic", "ngrc"), help="predictor kind override")
    _add_common(p)

    p = sub.add_parser("metrics", help="climate statistics of a trajectory CSV")
    p.add_argument("--input", required=True, metavar="PATH", help="t,x,y,z CSV file")
    _add_common(p)

    p = sub.add_parser("sweep", help="training-length sweep with reference climates")
    _add_common(p)

    p = sub.add_parser("snapshot", help="export the exact training series")
    p.add_argument("--kind", choices=("classic", "ngrc"), help="predictor kind override")
    _add_common(p)

    return parser


def _load_setup(args) -> tuple:
    mapping = load_config_file(args.config) if args.config else {}
    cfg, spec = config_from_mapping(mapping)
    if args.seed is not None:
        cfg = replace(cfg, master_seed=args.seed)
    if getattr(args, "kind", None):
        cfg = replace(cfg, kind=args.kind)
    return cfg, spec


def _read_trajectory_csv(path) -> Trajectory:
    times, rows = [], []
    with open(path, newline="") as fh:
        reader = csv.reader(line for line in fh if not line.startswith("#"))
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:4]] != ["t", "x", "y", "z"]:
            raise ConfigError(f"{path}: expected a t,x,y,z trajectory CSV")
        for row in reader:
            if not row:
                continue
            times.append(float(row[0]))
            rows.append([float(v) for v in row[1:4]])
    if len(rows) < 2:
        raise ConfigError(f"{path}: need at least two samples")
    dt = times[1] - times[0]
    return Trajectory(dt, np.asarray(rows), t0=times[0])


def _predict_free_run(model, n_steps: int, dt: float) -> Trajectory:
    if isinstance(model, EsnModel):
        return esn.predict_autonomous(model, n_steps, dt)
    return ngrc.predict_autonomous(model, n_steps, dt)


def _cmd_simulate(args, cfg: ExperimentConfig) -> int:
    kind = "ref_train" if args.state == "train" else "ref_plant"
    params = cfg.train_params() if args.state == "train" else cfg.plant_params()
    rng = np.random.default_rng(
        derive_seed_sequence(cfg.master_seed, kind, 0, 0, 0)
    )
    u0 = relax_to_attractor(
        random_initial_state(rng), params, cfg.integrator(), cfg.transient_steps
    )
    steps = args.steps if args.steps is not None else cfg.horizon
    traj = simulate(u0, params, cfg.integrator(), steps)
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "trajectory.csv")
    write_trajectory_csv(path, traj, timestamp=not args.no_timestamp)
    print(f"wrote {path} ({len(traj)} samples, state={args.state})")
    return 0


def _cmd_train(args, cfg: ExperimentConfig) -> int:
    _, model = prepare_trained_model(cfg)
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "model.ccm")
    save_model(path, model)
    print(f"wrote {path} (kind={cfg.kind}, N={cfg.training_steps})")
    return 0


def _cmd_predict(args, cfg: ExperimentConfig) -> int:
    model = load_model(args.model)
    steps = args.steps if args.steps is not None else cfg.horizon
    traj = _predict_free_run(model, steps, cfg.dt)
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "prediction.csv")
    write_trajectory_csv(path, traj, timestamp=not args.no_timestamp)
    print(f"wrote {path} ({len(traj)} samples)")
    return 0


def _cmd_control(args, cfg: ExperimentConfig) -> int:
    report = run_single(cfg)
    os.makedirs(args.out, exist_ok=True)
    stamp = not args.no_timestamp
    for name, traj in (
        ("reference", report.reference),
        ("uncontrolled", report.uncontrolled),
        ("controlled", report.controlled),
        ("prediction", report.prediction),
        ("forces", report.forces),
    ):
        write_trajectory_csv(os.path.join(args.out, f"{name}.csv"), traj, stamp)
    summary_path = os.path.join(args.out, "climate_summary.csv")
    with open(summary_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["series", "lambda_max", "corr_dim"])
        for name, stats in (
            ("reference", report.reference_climate),
            ("uncontrolled", report.uncontrolled_climate),
            ("controlled", report.controlled_climate),
        ):
            writer.writerow([name, repr(stats.lambda_max), repr(stats.corr_dim)])
            print(
                f"{name:>12}: lambda_max={stats.lambda_max:.4f} "
                f"corr_dim={stats.corr_dim:.4f}"
            )
    print(f"wrote trajectories and {summary_path}")
    return 0


def _cmd_metrics(args, cfg: ExperimentConfig) -> int:
    traj = _read_trajectory_csv(args.input)
    stats = climate_stats(traj)
    print(f"lambda_max={stats.lambda_max:.6f}")
    print(f"corr_dim={stats.corr_dim:.6f}")
    os.makedirs(args.out, exist_ok=True)
    write_lyapunov_diagnostics_csv(
        os.path.join(args.out, "lyapunov_diagnostics.csv"), stats.lyap_diag
    )
    write_gp_diagnostics_csv(
        os.path.join(args.out, "gp_diagnostics.csv"), stats.gp_diag
    )
    return 0


def _cmd_sweep(args, cfg: ExperimentConfig, spec: SweepSpec) -> int:
    result = run_sweep(
        spec, cfg, out_dir=args.out, jobs=max(1, args.jobs),
        timestamp=not args.no_timestamp,
    )
    for row in result.summary:
        print(
            f"{row.kind:>10} N={row.n:<5} lambda={row.lambda_mean:.4f}"
            f"+-{row.lambda_std:.4f} nu={row.nu_mean:.4f}+-{row.nu_std:.4f} "
            f"n_ok={row.n_ok}"
        )
    print(f"wrote sweep outputs to {args.out}")
    return 0


def _cmd_snapshot(args, cfg: ExperimentConfig) -> int:
    path = export_training_snapshot(cfg, args.out, timestamp=not args.no_timestamp)
    print(f"wrote {path}")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg, spec = _load_setup(args)
        if args.command == "simulate":
            return _cmd_simulate(args, cfg)
        if args.command == "train":
            return _cmd_train(args, cfg)
        if args.command == "predict":
            return _cmd_predict(args, cfg)
        if args.command == "control":
            return _cmd_control(args, cfg)
        if args.command == "metrics":
            return _cmd_metrics(args, cfg)
        if args.command == "sweep":
            return _cmd_sweep(args, cfg, spec)
        if args.command == "snapshot":
            return _cmd_snapshot(args, cfg)
        raise ConfigError(f"unknown command {args.command!r}")
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DivergenceError as exc:
        print(f"divergence: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
