"""Command line: ``pdaosim run CONFIG`` and ``pdaosim catalog list|show|run``."""
from __future__ import annotations

import argparse
import logging
import sys

from . import __version__, catalog
from .config import load_config, override, to_yaml
from .errors import ConfigError
from .runner import EXIT_CONFIG, run_scenario


def _add_run_flags(p):
    p.add_argument("--method", choices=("master", "qsd", "both"))
    p.add_argument("--seed", type=int, help="QSD base seed")
    p.add_argument("--trajectories", type=int, help="number of QSD trajectories")
    p.add_argument("--out", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pdaosim", description=__doc__)
    parser.add_argument("--version", action="version", version=f"pdaosim {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario from a YAML config file")
    run.add_argument("config")
    _add_run_flags(run)

    cat = sub.add_parser("catalog", help="built-in figure scenarios")
    cat_sub = cat.add_subparsers(dest="action", required=True)
    cat_sub.add_parser("list", help="list entries")
    show = cat_sub.add_parser("show", help="print an entry as a YAML config")
    show.add_argument("name")
    crun = cat_sub.add_parser("run", help="run an entry")
    crun.add_argument("name")
    _add_run_flags(crun)
    return parser


def _execute(cfg, args) -> int:
    cfg = override(cfg, args.method, args.seed, args.trajectories, args.out)
    outcome = run_scenario(cfg)
    print(f"{cfg.name}: wrote {len(outcome.files) + 1} files to {cfg.output_dir}")
    if outcome.error:
        print(f"error: {outcome.error}", file=sys.stderr)
    if outcome.comparison is not None:
        print(f"  compare: {outcome.comparison.message}")
    for check in outcome.checks:
        print(f"  [{'PASS' if check['passed'] else 'FAIL'}] {check['kind']}")
    return outcome.status


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "run":
            return _execute(load_config(args.config), args)
        if args.action == "list":
            for entry in catalog.ENTRIES:
                print(f"{entry.name:8s} {entry.description}")
            return 0
        entry = catalog.get(args.name)
        if args.action == "show":
            print(to_yaml(entry.config().resolved), end="")
            return 0
        return _execute(entry.config(), args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
