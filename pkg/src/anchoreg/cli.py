"""Command-line front end: run experiments, list presets, validate configs."""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .harness import ConfigError, parse_config, preset, preset_names, run_experiment

_PRESET_BLURBS = {
    "fig1_fixed": "varying-step method, fixed anchor, almost-bilinear toy",
    "fig1_moving": "varying-step method, moving anchor, almost-bilinear toy",
    "fig2_pos": "varying-step method, positive anchor weight, almost-bilinear toy",
    "fig2_neg": "varying-step method, negative anchor weight, almost-bilinear toy",
    "fig3_pos": "fast extragradient, positive anchor weight, almost-bilinear toy",
    "fig3_neg": "fast extragradient, negative anchor weight, almost-bilinear toy",
    "fig4_all": "three varying-step variants on the almost-bilinear toy",
    "fig5_all": "three fast-extragradient variants on the comonotone quadratic",
    "fig6_all": "three monotone fast-extragradient variants on the full-scale game",
    "fig6_desk": "desk-scale version of the game comparison (CI friendly)",
}


def _color(text: str, code: str) -> str:
    if os.environ.get("NO_COLOR") or not sys.stdout.isatty():
        return text
    return f"\x1b[{code}m{text}\x1b[0m"


def _parse_overrides(pairs: list[str]) -> dict:
    overrides = {}
    for pair in pairs:
        if "=" not in pair:
            raise ConfigError(f"override {pair!r} is not of the form key=value")
        key, value = pair.split("=", 1)
        overrides[key.strip()] = value.strip()
    return overrides


def _cmd_run(args) -> int:
    if args.config:
        configs = [parse_config(Path(args.config).read_text(encoding="utf-8"))]
    else:
        configs = preset(args.preset, _parse_overrides(args.override))
    worst = 0
    for cfg in configs:
        result = run_experiment(cfg, output_dir=args.output_dir)
        print(result.summary)
        print(f"  wrote: {result.csv_path}")
        if result.coords_path is not None:
            print(f"  wrote: {result.coords_path}")
        status = "ok" if result.exit_code == 0 else "FAILED"
        print(f"  status: {_color(status, '32' if result.exit_code == 0 else '31')}")
        worst = max(worst, result.exit_code)
    return worst


def _cmd_check(args) -> int:
    cfg = parse_config(Path(args.config).read_text(encoding="utf-8"))
    print(f"config ok: {cfg.problem} {cfg.algorithm} {cfg.anchor_mode}, {cfg.iters} iterations")
    return 0


def _cmd_list_presets(_args) -> int:
    for name in preset_names():
        print(f"{name:12s} {_PRESET_BLURBS.get(name, '')}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="anchoreg",
        description="Anchored extragradient benchmark harness.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a config file or a named preset")
    group = p_run.add_mutually_exclusive_group(required=True)
    group.add_argument("--config", help="path to a flat key = value config file")
    group.add_argument("--preset", help="named preset (see list-presets)")
    p_run.add_argument(
        "--override",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override a preset key (repeatable; only with --preset)",
    )
    p_run.add_argument("--output-dir", default=None, help="directory for relative output paths")
    p_run.set_defaults(func=_cmd_run)

    p_check = sub.add_parser("check", help="validate a config file without running")
    p_check.add_argument("--config", required=True)
    p_check.set_defaults(func=_cmd_check)

    p_list = sub.add_parser("list-presets", help="list available presets")
    p_list.set_defaults(func=_cmd_list_presets)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "override", None) and not getattr(args, "preset", None):
        parser.error("--override requires --preset")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
