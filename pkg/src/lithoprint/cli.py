"""Command-line entry point: ``lithoprint convert|preview|estimate|profiles``.

Exit codes: 0 success, 2 bad configuration or unknown profile, 3 unreadable
or malformed input/output, 4 byte budget unreachable.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path
from typing import List, Optional, Sequence

from . import __version__, errors
from .config import KEYS, build_config, add_flags
from .fab import load_profiles, rank_by_cost, select_profiles
from .pipeline import build_mesh, convert, preview
from .stl import read_any

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_BUDGET = 4

ESTIMATE_SCHEMA = "lithoprint.estimate/1"
ESTIMATE_NOTE = "model material only; supports, infill and waste are not modelled"


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, (errors.BudgetTooSmall, errors.ResultTooSmall)):
        return EXIT_BUDGET
    if isinstance(
        exc,
        (
            OSError,
            errors.MalformedFile,
            errors.UnsupportedFormat,
            errors.ZeroDimension,
            errors.ImageTooSmall,
            errors.MalformedStl,
            errors.DegenerateFacet,
            errors.ProfileError,
        ),
    ):
        return EXIT_IO
    if isinstance(exc, (errors.LithoprintError, ValueError)):
        return EXIT_CONFIG
    raise exc


def _message(exc: BaseException) -> str:
    if isinstance(exc, errors.UnknownProfile):
        return str(exc)
    if isinstance(exc, OSError) and exc.filename is not None:
        return f"{exc.strerror or exc}: {exc.filename}"
    return str(exc) or type(exc).__name__


def _job_config(args: argparse.Namespace):
    overrides = {key.name: getattr(args, key.name) for key in KEYS if hasattr(args, key.name)}
    if getattr(args, "inputs", None):
        overrides["input"] = ",".join(args.inputs)
    config_file = Path(args.config) if args.config else None
    return build_config(config_file, overrides)


def cmd_convert(args: argparse.Namespace) -> int:
    result = convert(_job_config(args))
    summary = result.summary
    if summary["actual_bytes"] != summary["predicted_bytes"]:
        raise OSError(f"wrote {summary['actual_bytes']} bytes, expected {summary['predicted_bytes']}")
    print(json.dumps(summary, indent=2))
    return EXIT_OK


def cmd_preview(args: argparse.Namespace) -> int:
    heightmap, hillshade = preview(_job_config(args))
    print(json.dumps({"schema": "lithoprint.preview/1", "heightmap": str(heightmap), "hillshade": str(hillshade)}, indent=2))
    return EXIT_OK


def _table(rows: List[List[str]], right: Sequence[bool]) -> str:
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    lines = []
    for n, row in enumerate(rows):
        cells = [c.rjust(w) if r else c.ljust(w) for c, w, r in zip(row, widths, right)]
        lines.append("  ".join(cells).rstrip())
        if n == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines)


def cmd_estimate(args: argparse.Namespace) -> int:
    explicit = args.profile
    if args.stl:
        mesh = read_any(Path(args.stl).read_bytes())
        profile_file = Path(args.profile_file) if args.profile_file else None
        names = explicit
    else:
        if not args.config:
            raise errors.ConfigError("estimate needs an STL file or --config")
        config = build_config(Path(args.config))
        mesh = build_mesh(config).mesh
        profile_file = Path(args.profile_file) if args.profile_file else config.profile_file
        names = explicit or list(config.profiles)
    registry = load_profiles(profile_file)
    if not names:
        names = list(registry)
    estimates = rank_by_cost(mesh, select_profiles(names, registry))
    if args.json:
        doc = {
            "schema": ESTIMATE_SCHEMA,
            "note": ESTIMATE_NOTE,
            "volume_mm3": estimates[0].volume_mm3 if estimates else None,
            "estimates": [e.as_dict() for e in estimates],
        }
        print(json.dumps(doc, indent=2))
        return EXIT_OK
    rows = [["profile", "technology", "material", "quantity", "cost", "time"]]
    for e in estimates:
        p = registry[e.profile]
        rows.append([
            e.profile,
            p.technology,
            p.material,
            f"{e.quantity:.2f} {e.quantity_unit}",
            f"{e.cost:.2f} {e.currency}",
            f"{e.hours:.2f} h",
        ])
    print(f"volume: {estimates[0].volume_mm3:.1f} mm^3 ({ESTIMATE_NOTE})")
    print(_table(rows, [False, False, False, True, True, True]))
    return EXIT_OK


def cmd_profiles(args: argparse.Namespace) -> int:
    registry = load_profiles(Path(args.profile_file) if args.profile_file else None)
    if args.json:
        print(json.dumps([asdict(p) for p in registry.values()], indent=2))
        return EXIT_OK
    fields = ["name", "technology", "quote_basis", "material", "density_g_per_mm3", "unit_price", "throughput",
              "layer_height_mm", "currency"]
    rows = [fields]
    for p in registry.values():
        d = asdict(p)
        rows.append([f"{d[f]:.6g}" if isinstance(d[f], float) else str(d[f]) for f in fields])
    print(_table(rows, [False, False, False, False, True, True, True, True, False]))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lithoprint",
        description="Turn microscopy images into watertight, physically scaled lithograph STL files.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, func, help_text in (
        ("convert", cmd_convert, "build the STL and print a JSON summary"),
        ("preview", cmd_preview, "write heightmap and hillshade PNGs without meshing"),
    ):
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.add_argument("inputs", nargs="*", help="input images (override [job] input)")
        p.add_argument("-c", "--config", help="INI job file")
        p.add_argument("-o", dest="output", default=argparse.SUPPRESS, help="same as --output")
        add_flags(p)
        p.set_defaults(func=func)

    p = sub.add_parser("estimate", help="material, cost and time per printer profile")
    p.add_argument("stl", nargs="?", help="STL file (binary or ASCII)")
    p.add_argument("-c", "--config", help="INI job file to build the mesh from instead of an STL")
    p.add_argument("--profile", action="append", default=[], help="profile name; repeatable (default: all)")
    p.add_argument("--profile-file", help="extra printer profiles (INI)")
    p.add_argument("--json", action="store_true", help="structured output")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("profiles", help="list printer profiles")
    p.add_argument("--profile-file", help="extra printer profiles (INI)")
    p.add_argument("--json", action="store_true", help="structured output")
    p.set_defaults(func=cmd_profiles)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (errors.LithoprintError, OSError, ValueError) as exc:
        code = exit_code_for(exc)
        print(f"lithoprint {args.command}: error: {_message(exc)}", file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
