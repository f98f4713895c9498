"""Standalone figure renderer: plots --in DIR --out DIR --kinds convexity,carleman."""

from __future__ import annotations

import argparse
import sys

from .render import KINDS, PlotJob, SchemaError, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="covflow-plots", description="Render covflow CSV reports")
    parser.add_argument("--in", dest="input_dir", required=True, help="directory with covflow outputs")
    parser.add_argument("--out", dest="output_dir", required=True, help="directory for the figures")
    parser.add_argument(
        "--kinds",
        default=",".join(KINDS),
        help=f"comma-separated figure kinds from {list(KINDS)}",
    )
    parser.add_argument("--dpi", type=int, default=120)
    args = parser.parse_args(argv)
    kinds = tuple(k.strip() for k in args.kinds.split(",") if k.strip())
    try:
        job = PlotJob(input_dir=args.input_dir, output_dir=args.output_dir, kinds=kinds, dpi=args.dpi)
        written, _ = render(job)
    except (SchemaError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
