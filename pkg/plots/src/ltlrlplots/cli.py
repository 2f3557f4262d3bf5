"""Command line entry: expand input globs, render one figure."""

from __future__ import annotations

import argparse
import glob
import sys
from pathlib import Path

from .figures import FigureSpec, PlotError, plot_curves


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ltlrl-plots",
        description="Render learning-curve panels from aggregate CSVs.",
    )
    parser.add_argument(
        "inputs", nargs="+", help="aggregate CSV paths or globs, one curve set each"
    )
    parser.add_argument("--out", type=Path, required=True, help="output image path")
    parser.add_argument(
        "--cols", type=int, default=None, help="panels per row (default: all in one row)"
    )
    parser.add_argument("--xlabel", default="environment steps")
    parser.add_argument("--ylabel", default="eventually discounted return")
    return parser


def expand_inputs(patterns) -> tuple[Path, ...]:
    paths: list[Path] = []
    for pattern in patterns:
        matches = sorted(glob.glob(pattern))
        if not matches and Path(pattern).exists():
            matches = [pattern]
        paths.extend(Path(m) for m in matches)
    unique = tuple(dict.fromkeys(paths))
    if not unique:
        raise PlotError(f"no files match {patterns!r}")
    return unique


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = FigureSpec(
            inputs=expand_inputs(args.inputs),
            output=args.out,
            columns=args.cols,
            x_label=args.xlabel,
            y_label=args.ylabel,
        )
        written = plot_curves(spec)
    except (PlotError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(str(written))
    return 0


if __name__ == "__main__":
    sys.exit(main())
