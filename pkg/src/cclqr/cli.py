"""Command-line front end: cclqr <experiment> --config <path> [--out] [--seed]."""

import argparse
import sys

from .config import EXPERIMENTS, load_config, sec5_config_path
from .errors import ConfigError
from .experiments import run


def build_parser():
    parser = argparse.ArgumentParser(
        prog="cclqr",
        description="Cost-constrained LQR: primal-dual solver and duality lab.",
    )
    parser.add_argument(
        "experiment", choices=EXPERIMENTS,
        help="which experiment to run (overrides the config's experiment field)",
    )
    parser.add_argument(
        "--config", default=None,
        help="JSON run configuration (defaults to the bundled sec5.json)",
    )
    parser.add_argument("--out", default=None, help="output directory override")
    parser.add_argument("--seed", type=int, default=None, help="seed override")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    path = args.config if args.config is not None else sec5_config_path()
    try:
        cfg = load_config(path)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    cfg.experiment = args.experiment
    if args.out is not None:
        cfg.output_dir = args.out
    if args.seed is not None:
        cfg.seed = args.seed
    status = run(cfg)
    print(f"{cfg.experiment}: {'PASS' if status == 0 else 'FAIL'} "
          f"(details in {cfg.output_dir}/summary.txt)")
    return status


if __name__ == "__main__":
    sys.exit(main())
