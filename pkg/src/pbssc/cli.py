"""Command-line entry point: ``pbssc run``, ``pbssc compare``, ``pbssc trajectory``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

from .config import ConfigError, load_config
from .harness import Mode, RunError, compare, metrics, run_experiment, write_atomic

log = logging.getLogger("pbssc")

EXIT_OK, EXIT_ORDERING_FAILED, EXIT_ERROR = 0, 1, 2


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="YAML file merged over the defaults")
    p.add_argument("--out", type=Path, default=Path("out"), help="output directory (default: out)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pbssc",
        description="Supervisory switching control of a twin-thruster surface vehicle (simulation).",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="simulate one mode on the reference trajectory")
    _common(p)
    p.add_argument("--mode", choices=[m.value for m in Mode], default=Mode.PBSSC.value)
    p.add_argument("--seed", type=int, default=0, help="disturbance seed")
    p.add_argument("--no-disturbance", action="store_true")
    p.add_argument("--no-plots", action="store_true", help="skip the PNG figure")

    p = sub.add_parser("compare", help="run every mode over several seeds and check the ordering")
    _common(p)
    p.add_argument("--seeds", type=int, help="number of seeds, 0..N-1 (default: from config)")
    p.add_argument("--mode", action="append", choices=[m.value for m in Mode],
                   help="restrict to these modes (repeatable; default: all)")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.add_argument("--save-runs", action="store_true", help="also write every run record")
    p.add_argument("--no-plots", action="store_true", help="skip the PNG figure")

    p = sub.add_parser("trajectory", help="export the reference trajectory")
    _common(p)
    return parser


def _cmd_run(args, config) -> int:
    t0 = time.perf_counter()
    try:
        rec = run_experiment(config, args.mode, args.seed, disturbance=not args.no_disturbance)
    except RunError as exc:
        log.error("%s", exc)
        return EXIT_ERROR
    args.out.mkdir(parents=True, exist_ok=True)
    stem = f"run_{rec.mode.value}_seed{rec.seed}"
    text = rec.to_csv() if args.format == "csv" else rec.to_json()
    write_atomic(args.out / f"{stem}.{args.format}", text)
    m = metrics(rec)
    summary = {"mode": rec.mode.value, "seed": rec.seed, "config_hash": rec.config_hash,
               "pi_r": m.pi_r, "pi_psi": m.pi_psi}
    write_atomic(args.out / f"{stem}_metrics.json", json.dumps(summary, indent=2) + "\n")
    if not args.no_plots:
        from .plotting import plot_run

        plot_run(rec, args.out / f"{stem}.png")
    print(f"{rec.mode.value} seed={rec.seed}: Pi_r={m.pi_r:.2f} m^2 s, Pi_psi={m.pi_psi:.1f} deg^2 s "
          f"({time.perf_counter() - t0:.1f} s)")
    return EXIT_OK


def _cmd_compare(args, config) -> int:
    n = config.seeds if args.seeds is None else args.seeds
    if n < 1:
        log.error("need at least one seed")
        return EXIT_ERROR
    modes = tuple(Mode(m) for m in args.mode) if args.mode else tuple(Mode)
    t0 = time.perf_counter()
    comp = compare(config, range(n), modes, jobs=args.jobs, keep_records=args.save_runs)
    elapsed = time.perf_counter() - t0
    args.out.mkdir(parents=True, exist_ok=True)
    text = comp.to_csv() if args.format == "csv" else comp.to_json()
    write_atomic(args.out / f"comparison.{args.format}", text)
    for (mode, seed), rec in comp.records.items():
        body = rec.to_csv() if args.format == "csv" else rec.to_json()
        write_atomic(args.out / f"run_{mode.value}_seed{seed}.{args.format}", body)
    if not args.no_plots:
        from .plotting import plot_comparison

        plot_comparison(comp, args.out / "comparison.png")
    print(comp.format_table())
    if set(modes) != set(Mode):
        print(f"partial comparison ({elapsed:.0f} s); ordering not evaluated")
        return EXIT_OK
    holds = comp.ordering_holds()
    passed = sum(comp.seed_passes(s) for s in comp.seeds)
    print(f"ordering {'holds' if holds else 'FAILS'}: {passed}/{n} seeds pass ({elapsed:.0f} s)")
    return EXIT_OK if holds else EXIT_ORDERING_FAILED


def _cmd_trajectory(args, config) -> int:
    traj = config.reference()
    args.out.mkdir(parents=True, exist_ok=True)
    path = args.out / f"reference.{args.format}"
    if args.format == "csv":
        traj.to_csv(path)
    else:
        doc = {
            "t": traj.t.tolist(),
            "eta_d": traj.eta_d.tolist(),
            "etad_dot": traj.etad_dot.tolist(),
            "etad_ddot": traj.etad_ddot.tolist(),
            "segment": traj.segment_index.tolist(),
        }
        write_atomic(path, json.dumps(doc))
    print(f"{len(traj)} samples, t_final={traj.t_final:.1f} s -> {path}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        config = load_config(args.config)
    except (OSError, ConfigError, ValueError) as exc:
        log.error("cannot load configuration: %s", exc)
        return EXIT_ERROR
    handler = {"run": _cmd_run, "compare": _cmd_compare, "trajectory": _cmd_trajectory}[args.command]
    return handler(args, config)


if __name__ == "__main__":
    sys.exit(main())
