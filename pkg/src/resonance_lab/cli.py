"""Command-line entry point.

Exit codes: 0 when every verdict passes, 1 when a verdict fails, 2 on usage
or configuration errors.
"""

from __future__ import annotations

import argparse
import sys

from . import experiments as ex
from .errors import ResonanceLabError

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON configuration file")
    p.add_argument("--out", help="output directory (default: config output_dir or ./out)")
    p.add_argument("--seed", type=int, help="override the configured RNG seed")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="resonance-lab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, text in (("resonances", "sample T, S and R for a phase"),
                       ("classify", "check resonant-set claims for |xi|^alpha"),
                       ("simulate", "integrate the profile equation")):
        _common(sub.add_parser(name, help=text))
    exp = sub.add_parser("experiment", help="run a named experiment")
    exp.add_argument("name", choices=ex.EXPERIMENTS)
    _common(exp)
    sub.add_parser("selftest", help="fast numerical self-checks")
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE

    if args.command == "selftest":
        report = ex.selftest()
        print(report.summary())
        return EXIT_OK if report.passed else EXIT_FAIL

    name = args.name if args.command == "experiment" else args.command
    try:
        cfg = ex.load_config(name, args.config, args.seed)
    except ex.ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        report = ex.RUNNERS[name](cfg)
    except (ResonanceLabError, ValueError) as exc:
        where = f" (config: {args.config})" if args.config else ""
        print(f"error: {name}: {exc}{where}", file=sys.stderr)
        return EXIT_USAGE
    out = args.out or cfg.get("output_dir") or "out"
    report.write(out)
    print(report.summary())
    return EXIT_OK if report.passed else EXIT_FAIL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
