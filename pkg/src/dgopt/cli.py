"""Optimal DG placement on radial feeders: load flow, LSA/PSO runs and reports.

Exit codes: 0 success, 1 configuration error, 2 computation error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .network import NetworkError, SeriesKind, bundled_path, load_network, load_profile
from .powerflow import VoltageCollapseError, solve_horizon, solve_hour, write_solution_csv
from .runner import ConfigError, compare, load_config, report_base_case, rows_to_csv, run_scenario

EXIT_OK, EXIT_CONFIG, EXIT_COMPUTE = 0, 1, 2


def _cmd_run(args) -> int:
    seeds = list(range(args.seed_count)) if args.seed_count else None
    config = load_config(args.config, seeds=seeds, output_dir=args.out)
    if args.out is not None:
        config.output_dir = Path(args.out)
    report = run_scenario(config)
    base = report["base"]
    print(f"scenario {report['scenario']}: base loss {base['loss_kwh']:.1f} kWh, "
          f"vdev {base['vdev_puh']:.3f} pu*h")
    for opt, res in report["optimizers"].items():
        b = res["best"]
        print(f"  {opt.upper()}: objective {b['objective']:.4f}, loss {b['loss_kwh']:.1f} kWh "
              f"(-{b['loss_reduction_pct']:.1f}%), vdev {b['vdev_puh']:.3f} "
              f"(-{b['vdev_improvement_pct']:.1f}%), seed {b['seed']}")
    print(f"report written to {config.output_dir / 'report.json'}")
    return EXIT_OK


def _cmd_basecase(args) -> int:
    config = load_config(args.config)
    out = Path(args.out) if args.out else config.output_dir
    metrics = report_base_case(config, out)
    print(json.dumps(metrics, indent=2, sort_keys=True))
    return EXIT_OK


def _cmd_compare(args) -> int:
    rows, text = compare(args.reports)
    print(text)
    if args.csv:
        Path(args.csv).write_text(rows_to_csv(rows))
    return EXIT_OK


def _cmd_powerflow(args) -> int:
    network = load_network(args.network)
    if args.hour is None:
        sol = solve_hour(network)
        v, bus = sol.min_voltage
        print(f"loss {sol.total_loss_kw:.4f} kW, min |V| {v:.5f} pu at bus {bus}, "
              f"{sol.iterations} sweeps, converged={sol.converged}")
        if args.out:
            write_solution_csv(sol, args.out)
        return EXIT_OK
    profile = load_profile(args.profile or bundled_path("load_profile.csv"), SeriesKind.LOAD)
    horizon = solve_horizon(network, profile)
    if args.hour == "all":
        print(f"energy loss {horizon.total_loss_kwh:.3f} kWh, "
              f"voltage deviation {horizon.vdev_puh:.4f} pu*h")
        if args.out:
            write_solution_csv(horizon, args.out)
        return EXIT_OK
    try:
        hour = int(args.hour)
        sol = horizon.hours[hour - 1]
        if hour < 1:
            raise IndexError
    except (ValueError, IndexError):
        raise ConfigError(f"--hour must be 1..24 or 'all', got {args.hour!r}")
    v, bus = sol.min_voltage
    print(f"hour {hour}: loss {sol.total_loss_kw:.4f} kW, min |V| {v:.5f} pu at bus {bus}")
    if args.out:
        write_solution_csv(sol, args.out, first_hour=hour)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dgopt", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="optimise DG placement for a scenario")
    p.add_argument("--config", required=True)
    p.add_argument("--seed-count", type=int, help="use seeds 0..N-1 instead of the config's")
    p.add_argument("--out", help="output directory (overrides the config)")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("basecase", help="write no-DG loss and voltage matrices")
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_basecase)

    p = sub.add_parser("compare", help="tabulate best solutions of several reports")
    p.add_argument("reports", nargs="+")
    p.add_argument("--csv", help="also write the table as CSV")
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("powerflow", help="solve the load flow of a network file")
    p.add_argument("--network", required=True)
    p.add_argument("--hour", help="1..24 or 'all'; omit for nominal load")
    p.add_argument("--profile", help="load profile CSV (default: bundled)")
    p.add_argument("--out", help="directory for per-hour CSV dumps")
    p.set_defaults(func=_cmd_powerflow)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except (ConfigError, NetworkError, FileNotFoundError) as exc:
        print(f"dgopt: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        if args.command == "compare":
            print(f"dgopt: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        print(f"dgopt: computation error: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    except (ArithmeticError, VoltageCollapseError) as exc:
        print(f"dgopt: computation error: {exc}", file=sys.stderr)
        return EXIT_COMPUTE


if __name__ == "__main__":
    sys.exit(main())
