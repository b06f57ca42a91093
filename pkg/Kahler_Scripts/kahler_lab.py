#!/usr/bin/env python
import argparse
import logging
import os
import sys
from pathlib import Path

import kahler.cli as cli
from kahler.conventions import ConfigException

PROJECT_ROOT = Path(__file__).resolve().parents[1]
DEFAULT_CONFIG = os.environ.get(
    "KAHLER_CONFIG", str(PROJECT_ROOT / "Kahler_Configs" / "acceptance.xml")
)

# parameters
parser = argparse.ArgumentParser()
parser.add_argument(
    "subcommand",
    nargs="?",
    default="all",
    choices=cli.SUBCOMMANDS,
    help="experiment type to run (all)",
)
parser.add_argument(
    "--config",
    default=DEFAULT_CONFIG,
    help="experiment configuration file (Kahler_Configs/acceptance.xml)",
)
parser.add_argument("--out", default="results", help="output directory (results)")
parser.add_argument("--seed", type=int, default=None, help="override the configuration seed")
parser.add_argument(
    "--resolution-override",
    type=int,
    default=None,
    help="run every experiment on this single resolution",
)
parser.add_argument("--no-plots", help="skip the SVG figures", action="store_true")
parser.add_argument("--list-criteria", help="print the acceptance criteria and exit", action="store_true")
parser.add_argument("--verbose", help="increase output verbosity", action="store_true")
args = parser.parse_args()

if args.verbose:
    logging.basicConfig(level=logging.INFO)

if args.list_criteria:
    for number, text in sorted(cli.CRITERIA.items()):
        print("{:2d}  {}".format(number, text))
    sys.exit(0)

try:
    code, records = cli.run(
        args.subcommand,
        args.config,
        args.out,
        seed=args.seed,
        resolution_override=args.resolution_override,
        plots=not args.no_plots,
    )
except ConfigException as e:
    logging.error("configuration error at %s: %s", e.key_path, e.msg)
    sys.exit(2)

sys.stdout.write("\rComplete!            \n")
for r in records:
    if r.quantity == "acceptance":
        sys.stdout.write("{:2d} {:4s} {}\n".format(r.criterion, r.status, r.message or ""))
sys.exit(code)
