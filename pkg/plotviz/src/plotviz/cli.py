"""Command line: plot forward|ensemble --in DIR --out FILE.png"""

from __future__ import annotations

import argparse
import sys

from .render import render_ensemble_figure, render_forward_figure


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="plot", description="Render figures from ns3dvar run directories")
    sub = ap.add_subparsers(dest="kind", required=True)
    for kind, helptext in (("forward", "mode trajectories + relative error"),
                           ("ensemble", "pairwise member distances")):
        p = sub.add_parser(kind, help=helptext)
        p.add_argument("--in", dest="run_dir", required=True,
                       help="run directory with the CSV outputs")
        p.add_argument("--out", dest="out_path", required=True,
                       help="output image path (.png)")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    render = (render_forward_figure if args.kind == "forward"
              else render_ensemble_figure)
    try:
        out = render(args.run_dir, args.out_path)
    except (FileNotFoundError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
