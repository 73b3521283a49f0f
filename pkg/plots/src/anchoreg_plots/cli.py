"""Command-line entry point: render a plot spec file or direct flags."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .io import InputError
from .render import KINDS, PlotSpec, render

_SPEC_KEYS = ("kind", "inputs", "output", "reference_slope")


def _parse_input_token(token: str) -> tuple[str, str]:
    token = token.strip()
    if ":" in token:
        path, label = token.rsplit(":", 1)
        return path.strip(), label.strip()
    return token, Path(token).stem


def parse_spec(text: str) -> PlotSpec:
    """Flat key = value document, same format as the solver configs."""
    values: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise InputError(f"line {lineno}: expected 'key = value', got {body!r}")
        key, raw = (part.strip() for part in body.split("=", 1))
        if key not in _SPEC_KEYS:
            raise InputError(f"unknown key {key!r}")
        if key in values:
            raise InputError(f"duplicate key {key!r}")
        values[key] = raw
    for required in ("kind", "inputs", "output"):
        if required not in values:
            raise InputError(f"missing required key {required!r}")
    slope = values.get("reference_slope")
    return PlotSpec(
        kind=values["kind"],
        inputs=[_parse_input_token(tok) for tok in values["inputs"].split(",") if tok.strip()],
        output=values["output"],
        reference_slope=None if slope is None else float(slope),
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="anchoreg-plots",
        description="Render solver trajectory CSVs as figures (PNG or SVG by extension).",
    )
    parser.add_argument("--spec", help="path to a flat key = value plot spec")
    parser.add_argument("--kind", choices=KINDS)
    parser.add_argument(
        "--input",
        action="append",
        default=[],
        metavar="CSV[:LABEL]",
        help="trajectory CSV with an optional label (repeatable)",
    )
    parser.add_argument("--output", help="image path; extension picks the format")
    parser.add_argument("--reference-slope", type=float, default=None)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.spec:
            spec = parse_spec(Path(args.spec).read_text(encoding="utf-8"))
        else:
            if not (args.kind and args.input and args.output):
                parser.error("either --spec or all of --kind/--input/--output are required")
            spec = PlotSpec(
                kind=args.kind,
                inputs=[_parse_input_token(tok) for tok in args.input],
                output=args.output,
                reference_slope=args.reference_slope,
            )
        path = render(spec)
    except (InputError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote: {path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
