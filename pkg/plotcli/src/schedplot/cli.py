"""Command-line front end mirroring PlotSpec."""

from __future__ import annotations

import argparse
import sys

from .aggregate import METRIC_COLUMNS, PlotSpec
from .render import render


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="schedplot",
        description="Render per-scheme learning curves with 95% confidence bands "
                    "from simulator metrics CSVs",
    )
    p.add_argument("--csv", action="append", required=True, metavar="PATH",
                   help="metrics CSV (repeatable)")
    p.add_argument("--metric", default="success_norm", choices=METRIC_COLUMNS)
    p.add_argument("--window", type=int, default=10,
                   help="moving-average window in evaluation points (default 10)")
    p.add_argument("--out", default="curves.png", metavar="PATH",
                   help="output image path")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    spec = PlotSpec(csv_paths=tuple(args.csv), metric=args.metric,
                    smooth_window=args.window, out_path=args.out)
    try:
        print(render(spec))
        return 0
    except (ValueError, OSError) as exc:
        print(f"schedplot: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
