"""Command-line entry point: figures --in <csv> --fig <id> --out <path>."""

from __future__ import annotations

import argparse
import sys

from figure_kit.render import FIGURES, FigureError, render


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="figures",
                                description="Render a figure from an "
                                            "aggregated results CSV")
    p.add_argument("--in", dest="csv", required=True,
                   help="aggregated results CSV (fogsim-agg-v1)")
    p.add_argument("--fig", required=True, choices=sorted(FIGURES),
                   help="figure id")
    p.add_argument("--out", required=True, help="output image path (PNG)")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        render(args.fig, args.csv, args.out)
    except (FigureError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"{args.fig} -> {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
