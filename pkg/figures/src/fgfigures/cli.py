"""Command-line entry point: ``figures <figure-id> --manifest M --out O``."""

from __future__ import annotations

import argparse
import sys

from .render import FIGURE_IDS, FigureError, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="figures",
        description="Render a figure from a dynamics run's frames CSVs")
    parser.add_argument("figure_id", type=int, choices=FIGURE_IDS,
                        metavar="figure-id",
                        help="1: trajectory in the potential + energy traces; "
                             "2: quantum energy and TBF weights per mode; "
                             "3: quantum vs classical energy panels")
    parser.add_argument("--manifest", required=True,
                        help="path to the run's manifest.yaml")
    parser.add_argument("--out", required=True,
                        help="output image path (vector format, e.g. .svg)")
    args = parser.parse_args(argv)
    try:
        path = render(args.figure_id, args.manifest, args.out)
    except FigureError as exc:
        print(f"figures: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
