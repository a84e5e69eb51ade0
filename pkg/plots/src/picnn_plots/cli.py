"""picnn-plots command line entry point."""
from __future__ import annotations

import argparse
import sys

from .figures import KINDS, PlotJob, SchemaError, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="picnn-plots",
                                     description="render figures from picnn "
                                                 "experiment outputs")
    parser.add_argument("--kind", required=True, choices=KINDS)
    parser.add_argument("--in", dest="infile", required=True,
                        help="cells.csv / epochs.csv / pointwise.csv, or a "
                             "directory of report.json files for --kind channels")
    parser.add_argument("--out", required=True, help="output image path")
    args = parser.parse_args(argv)

    try:
        job = PlotJob(args.kind, args.infile, args.out)
        info = render(job)
    except (SchemaError, FileNotFoundError) as ex:
        print(f"error: {ex}", file=sys.stderr)
        return 2
    print(f"wrote {args.out}")
    if args.kind == "rates":
        for mode, d in info.items():
            print(f"{mode}: alpha={d['alpha']:.4f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
