"""Command-line entry: render CSVs into an output directory.

Usage::

    plotview sweep results.csv --output-dir figures/
    plotview svp   results.csv --output-dir figures/

Each run writes ``<csv stem>.png`` plus a ``.json`` sidecar with the plotted
series.  Exit code 0 on success, 2 on unreadable/empty/malformed input.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .render import MissingColumnError, PlotSpec, render_svp_comparison, render_sweep

__all__ = ["main", "run"]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="plotview", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    sweep = sub.add_parser("sweep", help="render a sweep CSV (one panel per config)")
    sweep.add_argument("csv", help="sweep CSV from temrec sweep-spikes / sweep-tems")
    sweep.add_argument("--output-dir", dest="output_dir", default=".")
    sweep.add_argument("--x-label", dest="x_label", default="sweep value")

    svp = sub.add_parser("svp", help="render a recovery-comparison CSV")
    svp.add_argument("csv", help="comparison CSV from temrec svp-demo")
    svp.add_argument("--output-dir", dest="output_dir", default=".")
    svp.add_argument("--x-label", dest="x_label", default="total number of spikes")

    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    out_dir = Path(args.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    image = out_dir / (Path(args.csv).stem + ".png")
    spec = PlotSpec(args.csv, str(image), x_label=args.x_label)
    try:
        if args.command == "sweep":
            render_sweep(spec)
        else:
            render_svp_comparison(spec)
    except (MissingColumnError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(image)
    return 0


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
