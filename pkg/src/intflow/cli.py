"""Command line entry point: ``intflow {fig1,fig2,continuity} --config ... --out ...``."""

from __future__ import annotations

import argparse
import logging
import sys

from . import _accel
from .errors import IntflowError
from .experiment import load_config, run_continuity, run_fig1, run_fig2

log = logging.getLogger("intflow")


def _fig2(cfg):
    rows, metrics = run_fig2(cfg)
    return metrics


COMMANDS = {"fig1": run_fig1, "fig2": _fig2, "continuity": run_continuity}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="intflow", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="YAML config file")
        p.add_argument("--out", help="output directory (overrides output_dir)")
        p.add_argument("--seed", type=int, help="RNG seed (overrides seed)")
        p.add_argument("--threads", type=int, default=0, help="worker threads, 0 = all cores")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )
    try:
        if args.threads < 0:
            raise IntflowError("--threads must be >= 0")
        _accel.set_threads(args.threads)
        cfg = load_config(args.config, output_dir=args.out, seed=args.seed)
        metrics = COMMANDS[args.command](cfg)
    except (IntflowError, OSError) as exc:
        msg = " ".join(str(exc).split())
        print(f"intflow {args.command}: error: {msg}", file=sys.stderr)
        return 1
    for key in sorted(metrics):
        print(f"{key} = {metrics[key]}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
