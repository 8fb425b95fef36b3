"""Script entry point: flags mirror RenderSpec.

Exit codes: 0 ok, 2 schema mismatch or bad arguments.
"""

from __future__ import annotations

import argparse
import sys

from .io import SchemaMismatchError
from .render import DEFAULT_DPI, RenderSpec, render, save


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="figrender",
        description="Render chainlab CSV/JSON outputs to figures.")
    sub = parser.add_subparsers(dest="kind", required=True)
    helps = {
        "bifurcation": "scatter of attractor values vs r (input: bifurcation.csv)",
        "ccm": "cross-map skill vs library size (input: report.json)",
        "trajectory": "both chains vs iteration (input: trajectory.csv)",
    }
    for kind, help_text in helps.items():
        p = sub.add_parser(kind, help=help_text)
        p.add_argument("--input", required=True, help="input data file")
        p.add_argument("--output", required=True, help="output image path")
        p.add_argument("--x-min", type=float, default=None)
        p.add_argument("--x-max", type=float, default=None)
        p.add_argument("--y-min", type=float, default=None)
        p.add_argument("--y-max", type=float, default=None)
        p.add_argument("--point-size", type=float, default=0.25)
        p.add_argument("--dpi", type=int, default=DEFAULT_DPI)
        if kind == "trajectory":
            p.add_argument("--events", default=None,
                           help="events.csv to overlay as vertical marks")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    spec = RenderSpec(
        kind=args.kind,
        input_path=args.input,
        output_path=args.output,
        events_path=getattr(args, "events", None),
        x_min=args.x_min, x_max=args.x_max,
        y_min=args.y_min, y_max=args.y_max,
        point_size=args.point_size,
        dpi=args.dpi,
    )
    try:
        fig, stats = render(spec)
        save(fig, spec)
    except SchemaMismatchError as e:
        print(f"schema mismatch: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"cannot write figure: {e}", file=sys.stderr)
        return 2
    detail = ", ".join(f"{k}={v}" for k, v in sorted(stats.items()))
    print(f"wrote {spec.output_path} ({detail})", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
