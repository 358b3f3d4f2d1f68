"""Command line front end: ``plotkit <kind> --in <csv...> --out <png>``.

Exit codes: 0 success, 1 anything wrong with the request (unknown kind,
unreadable file, missing required column).
"""

from __future__ import annotations

import argparse
import sys

from . import KINDS, PlotJob, PlotkitError, render


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems are configuration errors
        self.exit(1, f"{self.prog}: error: {message}\n")


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="plotkit", description=__doc__.splitlines()[0])
    parser.add_argument("kind", choices=KINDS, help="plot kind")
    parser.add_argument("--in", dest="inputs", nargs="+", required=True,
                        metavar="CSV", help="input tables, one series each")
    parser.add_argument("--out", required=True, metavar="PNG",
                        help="output image path")
    parser.add_argument("--linear", action="store_true",
                        help="linear value axis instead of the default log scale")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    job = PlotJob(tuple(args.inputs), args.kind, args.out, logy=not args.linear)
    try:
        info = render(job)
    except (PlotkitError, FileNotFoundError) as exc:
        print(f"plotkit: error: {exc}", file=sys.stderr)
        return 1
    notes = " ".join(f"{k}={v!r}" for k, v in sorted(info.items()))
    print(f"wrote {job.out}" + (f" ({notes})" if notes else ""))
    return 0


if __name__ == "__main__":
    sys.exit(main())
