"""Command-line interface.

    photodissim [--config PATH] [--out DIR] [--format csv|json] [--seed N] [--allow-noncp] COMMAND

Commands: validate, evolve, probability, spectrum, fit, sweep.  Exit codes:
0 success, 2 configuration error, 3 physics-regime error, 4 numerical failure.
Diagnostics go to standard error at the level set by PHOTODISSIM_LOG
(quiet, info or debug).
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
from pathlib import Path

from .config import ScenarioConfig, parse_config
from .core import validate_cp
from .errors import BadValue, ConfigError, PhotodissimError
from .scenario import run_scenario, sweep

log = logging.getLogger("photodissim")

_LEVELS = {"quiet": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}
_COMMAND_OUTPUT = {"evolve": "trajectory", "probability": "probability", "spectrum": "spectrum", "fit": "fit"}


def _setup_logging() -> None:
    name = os.environ.get("PHOTODISSIM_LOG", "info").lower()
    level = _LEVELS.get(name, logging.INFO)
    root = logging.getLogger("photodissim")
    root.handlers[:] = [logging.StreamHandler(sys.stderr)]
    root.handlers[0].setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    root.setLevel(level)
    root.propagate = False


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, default=argparse.SUPPRESS, help="scenario TOML file")
    common.add_argument("--out", type=Path, default=argparse.SUPPRESS, help="output directory")
    common.add_argument("--format", choices=("csv", "json"), default=argparse.SUPPRESS)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="noise seed")
    common.add_argument("--allow-noncp", action="store_true", default=argparse.SUPPRESS,
                        help="accept dissipation parameters that violate complete positivity")

    parser = argparse.ArgumentParser(prog="photodissim", parents=[common],
                                     description="Dissipative photon polarization dynamics.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("validate", parents=[common], help="report the complete-positivity conditions")
    sub.add_parser("evolve", parents=[common], help="write the density-matrix trajectory")
    sub.add_parser("probability", parents=[common], help="write the analyzer probability curve")
    sub.add_parser("spectrum", parents=[common], help="write the probability spectrum")
    sub.add_parser("fit", parents=[common], help="fit the damped-oscillation model")
    sw = sub.add_parser("sweep", parents=[common], help="repeat the run over values of one key")
    sw.add_argument("--axis", required=True, help="dotted key, e.g. dissipation.alpha")
    sw.add_argument("--values", required=True, help="comma-separated numbers")
    sw.add_argument("--workers", type=int, default=None)
    return parser


def _load(args) -> ScenarioConfig:
    if getattr(args, "config", None) is None:
        raise BadValue("--config", "a configuration file is required")
    try:
        text = args.config.read_text()
    except OSError as exc:
        raise BadValue("--config", f"cannot read {args.config}: {exc.strerror}") from None
    allow = getattr(args, "allow_noncp", False) or args.command == "validate"
    return parse_config(text, allow_noncp=allow)


def _values(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise BadValue("--values", f"not a comma-separated list of numbers: {text!r}") from None


def _run(args) -> int:
    cfg = _load(args)
    out = getattr(args, "out", Path("out"))
    fmt = getattr(args, "format", "csv")
    seed = getattr(args, "seed", None)

    if args.command == "validate":
        report = validate_cp(cfg.dissipation)
        for c in report.conditions:
            print(f"{'ok  ' if c.passed else 'FAIL'} {c.name:<40} {c.residual:.6g}")
        print("complete positivity: " + ("satisfied" if report.ok else "violated"))
        return 0 if report.ok or getattr(args, "allow_noncp", False) else ConfigError.exit_code

    if args.command == "sweep":
        reports = sweep(cfg, args.axis, _values(args.values), out, fmt=fmt, seed=seed, max_workers=args.workers)
        print(json.dumps([r.to_dict() for r in reports], indent=1))
        return 0

    cfg = dataclasses.replace(cfg, outputs=(_COMMAND_OUTPUT[args.command],))
    report = run_scenario(cfg, out, fmt=fmt, seed=seed)
    print(json.dumps(report.to_dict(), indent=1))
    return 0


def main(argv=None) -> int:
    _setup_logging()
    logging.captureWarnings(True)
    args = build_parser().parse_args(argv)
    try:
        return _run(args)
    except PhotodissimError as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
