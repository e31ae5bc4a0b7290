"""Command-line entry point.

Exit status: 0 when every check passes, 1 when a check fails, 2 on bad
input (unreadable or invalid scenario, bad arguments).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import checks
from .corpus import ENV_VAR, resolve
from .generate import PROFILES, FixtureSpec, GeneratorError, generate_fixture
from .projectors import KINDS
from .report import render_figures, render_structured, render_text
from .scenario import ScenarioError, dumps, load

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2

SCENARIO_COMMANDS = ("validate", "hl-check", "split", "supports", "projectors", "diagram-check", "compose-check", "report")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="dtproj",
        description="Exact checks of perverse filtrations, canonical splittings and decomposition projectors.",
        epilog=f"Scenario names without a path resolve against the shipped corpus, or ${ENV_VAR} if set.",
    )
    sub = p.add_subparsers(dest="command", required=True)
    for name in SCENARIO_COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--scenario", action="append", required=True, metavar="PATH",
                        help="scenario file or corpus name; repeat for batch runs")
        sp.add_argument("--format", choices=("text", "structured"), default="text")
        if name in ("projectors", "report"):
            sp.add_argument("--family", choices=KINDS, action="append",
                            help="restrict to one projector family (repeatable); default all")
        if name == "report":
            sp.add_argument("--figures", metavar="DIR", help="also write PNG figures to DIR")
    g = sub.add_parser("generate", help="write a seeded synthetic scenario")
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--profile", choices=PROFILES, default="hl-only")
    g.add_argument("--max-dim", type=int, default=12)
    g.add_argument("--max-strata", type=int, default=3)
    g.add_argument("--max-length", type=int, default=5)
    g.add_argument("--out", metavar="PATH", help="output file (default stdout)")
    return p


def _run_scenarios(args) -> int:
    results = []
    for name in args.scenario:
        try:
            s = load(resolve(name))
        except (ScenarioError, FileNotFoundError, OSError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_INPUT
        fn = checks.COMMANDS[args.command]
        kinds = tuple(args.family) if getattr(args, "family", None) else KINDS
        res = fn(s, kinds) if args.command in ("projectors", "report") else fn(s)
        results.append(res)
        if getattr(args, "figures", None):
            for path in render_figures(s, args.figures):
                print(f"wrote {path}", file=sys.stderr)
    out = render_structured(results) if args.format == "structured" else render_text(results)
    sys.stdout.write(out)
    return EXIT_OK if all(r.ok for r in results) else EXIT_FAIL


def _generate(args) -> int:
    try:
        spec = FixtureSpec(args.seed, args.profile, args.max_dim, args.max_strata, args.max_length)
        fx = generate_fixture(spec)
    except GeneratorError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    text = dumps(fx.scenario)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "generate":
        return _generate(args)
    return _run_scenarios(args)


if __name__ == "__main__":
    sys.exit(main())
