"""Command line: plot <kind> --in GLOB --out PATH."""
from __future__ import annotations

import argparse
import sys

from .readers import PlotInputError, expand_inputs, load_series, load_trajectory
from .render import loglog_figure, save_png, trajectories_figure

KINDS = ("trajectories", "cost", "value_error", "policy_error")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plot",
        description="Render figures from the solver's CSV/JSON artifacts.",
    )
    parser.add_argument("kind", choices=KINDS)
    parser.add_argument(
        "--in", dest="inputs", required=True, metavar="GLOB",
        help="input files: trajectory CSVs for 'trajectories' (one panel "
             "each), exactly one JSON report for the log-log kinds",
    )
    parser.add_argument("--out", required=True, help="output PNG path")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        paths = expand_inputs(args.inputs)
        if args.kind == "trajectories":
            fig = trajectories_figure([load_trajectory(p) for p in paths])
        else:
            if len(paths) != 1:
                raise PlotInputError(
                    f"{args.inputs!r} matched {len(paths)} files; the "
                    f"{args.kind} figure needs exactly one report"
                )
            fig = loglog_figure(load_series(args.kind, paths[0]))
        save_png(fig, args.out)
    except PlotInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
