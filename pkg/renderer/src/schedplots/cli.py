"""CLI: ``schedplots render --spec <file.json>``."""

from __future__ import annotations

import argparse
import sys

import matplotlib.pyplot as plt

from .render import render
from .specs import load_spec


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="schedplots", description="Render scheduling figure-feed CSVs to images."
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("render", help="render one figure from a spec file")
    p.add_argument("--spec", required=True, action="append",
                   help="figure spec JSON (repeatable)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        for spec_path in args.spec:
            spec = load_spec(spec_path)
            fig = render(spec)
            plt.close(fig)
            print(f"wrote {spec.output_image}")
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
