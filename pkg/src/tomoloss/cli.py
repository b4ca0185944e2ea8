"""Command-line front end.

Subcommands:
    nstar          boundary threshold for one state (prints real + floored)
    curves         loss curves for a config file (CSV + plot-ready data)
    reproduce      canonical panel configurations by figure id
    validate-povm  run the POVM validity checks
"""

from __future__ import annotations

import argparse
import sys

from .bloch import BlochVector, SphericalCoords, bloch_from_spherical, xyz_povm
from .exceptions import TomolossError
from .reporting import (
    FIGURE_IDS,
    cmd_curves,
    cmd_nstar,
    cmd_reproduce,
    cmd_validate_povm,
    load_config,
)


def _add_state_arguments(parser: argparse.ArgumentParser) -> None:
    group = parser.add_mutually_exclusive_group(required=True)
    group.add_argument("--spherical", nargs=3, type=float, metavar=("R", "THETA", "PHI"),
                       help="state as radius, polar angle, azimuth (radians)")
    group.add_argument("--cartesian", nargs=3, type=float, metavar=("X", "Y", "Z"),
                       help="state as Cartesian Bloch components")


def _state_from_args(args) -> BlochVector:
    if args.spherical is not None:
        return bloch_from_spherical(SphericalCoords(*args.spherical))
    return BlochVector(*args.cartesian)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tomoloss",
        description="Finite-sample estimation errors in one-qubit tomography",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_nstar = sub.add_parser("nstar", help="boundary threshold for one state")
    _add_state_arguments(p_nstar)
    p_nstar.add_argument("--config", help="config file supplying the POVM")

    p_curves = sub.add_parser("curves", help="loss curves for a config file")
    p_curves.add_argument("--config", required=True, help="YAML experiment config")
    p_curves.add_argument("--out", default="out", help="output directory")
    p_curves.add_argument("--seed", type=int, help="override the config seed")
    p_curves.add_argument("--sequences", type=int, help="override the sequence count")
    p_curves.add_argument("--workers", type=int, default=1, help="parallel workers")
    p_curves.add_argument("--dry-run", action="store_true",
                          help="validate and print the plan without sampling")

    p_rep = sub.add_parser("reproduce", help="canonical data for a published panel")
    p_rep.add_argument("figure", help=f"one of: {', '.join(FIGURE_IDS)}")
    p_rep.add_argument("--out", default="out", help="output directory")
    p_rep.add_argument("--seed", type=int, help="override the default seed")
    p_rep.add_argument("--sequences", type=int, help="override the sequence count")
    p_rep.add_argument("--workers", type=int, default=1, help="parallel workers")
    p_rep.add_argument("--dry-run", action="store_true",
                       help="validate and print the plan without sampling")

    p_val = sub.add_parser("validate-povm", help="run the POVM validity checks")
    p_val.add_argument("--config", help="config file supplying the POVM (default: xyz)")

    return parser


def _povm_from_config_path(path):
    if path is None:
        return xyz_povm()
    return load_config(path).povm


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "nstar":
            cmd_nstar(_state_from_args(args), _povm_from_config_path(args.config))
            return 0
        if args.command == "curves":
            config = load_config(args.config)
            overrides = {}
            if args.seed is not None:
                overrides["seed"] = args.seed
            if args.sequences is not None:
                overrides["sequences"] = args.sequences
            if overrides:
                from dataclasses import replace
                config = replace(config, **overrides)
            cmd_curves(config, args.out, dry_run=args.dry_run, workers=args.workers)
            return 0
        if args.command == "reproduce":
            cmd_reproduce(args.figure, args.out, sequences=args.sequences,
                          seed=args.seed, dry_run=args.dry_run, workers=args.workers)
            return 0
        if args.command == "validate-povm":
            ok = cmd_validate_povm(_povm_from_config_path(args.config))
            return 0 if ok else 1
    except TomolossError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
