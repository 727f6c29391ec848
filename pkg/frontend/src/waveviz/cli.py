"""Command line entry point: one figure per invocation."""
from __future__ import annotations

import argparse
import sys

from .plots import KINDS, PlotSpec, VizError, render

EXIT_OK = 0
EXIT_INPUT = 2


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="waveviz",
        description="Render figures from simulation run directories (CSV contract).")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("plot", help="render one figure")
    p.add_argument("--kind", required=True, choices=KINDS)
    p.add_argument("--in", dest="in_dir", required=True, help="run output directory")
    p.add_argument("--out", required=True, help="image file to write")
    p.add_argument("--xlabel", default="Time t")
    p.add_argument("--ylabel", default=None)
    p.add_argument("--max-columns", type=int, default=2000,
                   help="heatmap time decimation limit")
    args = parser.parse_args(argv)

    try:
        spec = PlotSpec(in_dir=args.in_dir, kind=args.kind, out_path=args.out,
                        xlabel=args.xlabel, ylabel=args.ylabel,
                        max_columns=args.max_columns)
        info = render(spec)
    except VizError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    print(f"wrote {info.out_path} ({info.kind}, {info.n_points} samples)")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
