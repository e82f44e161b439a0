"""Command-line entry point: ``mirrorloc <experiment> [config] [--set key=value ...]``."""

from __future__ import annotations

import argparse
import logging
import sys

from .config import EXPERIMENTS, load_config
from .errors import ConfigError
from .experiments import EXIT_CONFIG, run_experiment


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mirrorloc",
        description="Classical and quantum dynamics of a modulated optomechanical mirror.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="experiment", required=True)
    helps = {
        "poincare": "stroboscopic sections for each lam_eff in lam_eff_list",
        "dispersion": "classical/quantum dispersion series and time-averaged distributions",
        "distributions": "time-averaged position and momentum distributions only",
        "spatiotemporal": "decimated density maps versus time",
        "sweep": "final dispersions over sweep_lam_eff_list x hbar_list",
    }
    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=helps[name])
        p.add_argument("config", nargs="?", help="flat key = value config file")
        p.add_argument("--set", dest="overrides", action="append", default=[],
                       metavar="KEY=VALUE", help="override one config key (repeatable)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        cfg = load_config(args.config, args.experiment, args.overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return run_experiment(cfg)


if __name__ == "__main__":
    sys.exit(main())
