"""Command-line entry point: plotgen <kind> --in <csv> --out <img>."""

from __future__ import annotations

import argparse
import sys

from .io import SchemaError
from .plots import plot_convergence, plot_errorfield, plot_flows

_KINDS = {
    "convergence": plot_convergence,
    "flows": plot_flows,
    "errorfield": plot_errorfield,
}


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(prog="plotgen")
    ap.add_argument("kind", choices=sorted(_KINDS))
    ap.add_argument("--in", dest="csv_in", required=True)
    ap.add_argument("--out", dest="img_out", required=True)
    ap.add_argument("--methods", nargs="*", default=None)
    args = ap.parse_args(argv)
    try:
        path = _KINDS[args.kind](args.csv_in, args.img_out, args.methods)
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return 1
    print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
