"""Command line entry points: solve, converge, snapshots.

Every subcommand reads a scenario config; command line flags override
config values.  The default worker count comes from CQSCAT_WORKERS.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys

from .config import load_scenario
from .cq import MultistepRule
from .scenarios import Scheme, convergence_study, render_snapshots, run_scenario


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, help="scenario configuration file")
    parser.add_argument("--rule", choices=["bdf2", "trapezoidal"], help="time rule override")
    parser.add_argument(
        "--scheme", choices=["standard", "modified"], help="quadrature scheme override"
    )
    parser.add_argument("--N", type=int, dest="num_steps", help="time step count override")
    parser.add_argument("--workers", type=int, help="parallel frequency solves")
    parser.add_argument("--out", help="output directory override")


def _apply_overrides(sc, args):
    changes = {}
    if args.rule:
        changes["rule"] = MultistepRule[args.rule.upper()]
    if args.scheme:
        changes["scheme"] = Scheme(args.scheme)
    if args.num_steps:
        changes["num_steps"] = args.num_steps
    if args.out:
        changes["output_dir"] = args.out
    return dataclasses.replace(sc, **changes) if changes else sc


def _parse_floats(text: str) -> list:
    return [float(v) for v in text.split(",") if v.strip()]


def _parse_ints(text: str) -> list:
    return [int(v) for v in text.split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cqscat", description="Transient acoustic scattering via convolution quadrature"
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="run one scenario and persist field samples")
    _add_common(p_solve)
    p_solve.add_argument(
        "--marching", action="store_true", help="use marching-on-in-time instead of all-at-once"
    )

    p_conv = sub.add_parser("converge", help="error table against a fine reference")
    _add_common(p_conv)
    p_conv.add_argument("--N-list", required=True, help="comma separated step counts")
    p_conv.add_argument("--reference-N", type=int, required=True, help="reference step count")
    p_conv.add_argument(
        "--spatial-factor", type=float, default=1.5, help="reference spatial refinement factor"
    )

    p_snap = sub.add_parser("snapshots", help="total field on a grid at chosen times")
    _add_common(p_snap)
    p_snap.add_argument("--times", help="comma separated snapshot times")
    p_snap.add_argument("--grid-n", type=int, default=61, help="grid points per axis")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    sc = _apply_overrides(load_scenario(args.config), args)
    if args.command == "solve":
        result = run_scenario(sc, workers=args.workers, marching=args.marching)
        for path in result.paths:
            print(path)
        if result.report is not None:
            print(
                f"solved {result.report.num_frequencies} frequencies "
                f"in {result.report.wall_time:.2f}s"
            )
        return 0
    if args.command == "converge":
        out_path = None
        if sc.output_dir:
            out_path = f"{sc.output_dir}/errors.csv"
        rows = convergence_study(
            sc,
            _parse_ints(args.N_list),
            args.reference_N,
            spatial_factor=args.spatial_factor,
            workers=args.workers,
            out_path=out_path,
        )
        print("N,rule,scheme,omega,error")
        for row in rows:
            print(f"{row['N']},{row['rule']},{row['scheme']},{row['omega']},{row['error']:.6e}")
        return 0
    if args.command == "snapshots":
        from .scenarios import DEFAULT_SNAPSHOT_TIMES, default_grid

        times = _parse_floats(args.times) if args.times else DEFAULT_SNAPSHOT_TIMES
        paths = render_snapshots(
            sc,
            times=times,
            grid_spec=default_grid(sc.geometry, args.grid_n),
            workers=args.workers,
            out_dir=args.out or sc.output_dir,
        )
        for path in paths:
            print(path)
        return 0
    return 2


if __name__ == "__main__":
    sys.exit(main())
