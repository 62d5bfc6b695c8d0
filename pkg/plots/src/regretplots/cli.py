"""Standalone figure renderer for harness result files."""

from __future__ import annotations

import argparse
import sys

from .figures import KINDS, FigureSpec, plot
from .schema import SchemaError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="regret-plots",
        description="Render benchmark figures from harness result files",
    )
    parser.add_argument("--kind", required=True, choices=KINDS)
    parser.add_argument("--in", dest="inputs", action="append", required=True,
                        metavar="FILE", help="input file (repeatable)")
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("--bounds", help="bounds table for a twin right axis")
    parser.add_argument("--logx", action="store_true")
    parser.add_argument("--logy", action="store_true")
    parser.add_argument("--title", default="")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    spec = FigureSpec(kind=args.kind, inputs=args.inputs, out=args.out,
                      bounds=args.bounds, logx=args.logx, logy=args.logy,
                      title=args.title)
    try:
        out = plot(spec)
    except (SchemaError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
