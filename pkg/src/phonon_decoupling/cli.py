"""Command line entry point: ``phonon-decoupling run|presets|validate``."""

from __future__ import annotations

import argparse
import logging
import sys

from .config import echo, parse_and_validate
from .errors import PhononDecouplingError, ValidationError
from .presets import list_presets
from .runner import WORKERS_ENV, execute

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_VALIDATION = 2
EXIT_PARTIAL = 3


def _parser():
    ap = argparse.ArgumentParser(prog="phonon-decoupling", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="execute a configuration file")
    run.add_argument("config")
    run.add_argument("--workers", type=int, default=None, help=f"sweep worker processes (env {WORKERS_ENV})")
    run.add_argument("--out", default=None, help="output directory, overrides [output] directory")
    run.add_argument("--converge", action="store_true", help="refine dt and svd_cutoff until converged")
    run.add_argument("--seedless", action="store_true", help="accepted for compatibility; no randomness is used")
    sub.add_parser("presets", help="list the material presets")
    val = sub.add_parser("validate", help="check a configuration file and echo it")
    val.add_argument("config")
    return ap


def _report(exc: ValidationError):
    print("invalid configuration:", file=sys.stderr)
    for p in exc.problems:
        print(f"  - {p}", file=sys.stderr)


def main(argv=None):
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    if args.command == "presets":
        print(f"{'name':<24}{'hbar g [meV]':>14}{'hbar xi [meV]':>15}  2g > xi")
        for p in list_presets():
            print(f"{p.name:<24}{p.hbar_g_meV:>14g}{p.hbar_xi_meV:>15g}  {'yes' if p.decoupled else 'no'}")
        return EXIT_OK
    try:
        cfg = parse_and_validate(args.config)
    except ValidationError as exc:
        _report(exc)
        return EXIT_VALIDATION
    print(echo(cfg))
    if args.command == "validate":
        return EXIT_OK
    try:
        outcome = execute(cfg, out_dir=args.out, workers=args.workers, converge=args.converge)
    except PhononDecouplingError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    for f in outcome.files:
        print(f"wrote {f}")
    return outcome.status


if __name__ == "__main__":
    sys.exit(main())
