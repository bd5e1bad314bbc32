"""Command line front end: ``figures <kind> --in <csv> --out <img>``.

Exit codes: 0 success, 2 unusable input (missing file, missing columns,
nothing plottable).
"""

from __future__ import annotations

import argparse
import sys

from .plots import KINDS, FigureError, FigureJob, render_job

EXIT_OK = 0
EXIT_INPUT = 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="figures",
        description="Render experiment-result CSVs to static SVG or PNG figures",
    )
    parser.add_argument("kind", choices=KINDS, help="figure kind")
    parser.add_argument(
        "--in",
        dest="inputs",
        action="append",
        required=True,
        metavar="CSV",
        help="input results CSV (repeat to concatenate runs)",
    )
    parser.add_argument("--out", required=True, metavar="IMG", help="output image path")
    parser.add_argument(
        "--log-x",
        action=argparse.BooleanOptionalAction,
        default=None,
        help="force the x-axis scale (default: log for cdf, linear otherwise)",
    )
    return parser


def cli_main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as err:
        return EXIT_INPUT if err.code not in (0, None) else EXIT_OK
    try:
        job = FigureJob(
            inputs=tuple(args.inputs),
            kind=args.kind,
            output=args.out,
            log_x=args.log_x,
        )
        render_job(job)
    except FigureError as err:
        sys.stderr.write(f"figures: {err}\n")
        return EXIT_INPUT
    return EXIT_OK


def main() -> None:
    sys.exit(cli_main())
