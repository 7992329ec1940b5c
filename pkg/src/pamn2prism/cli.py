"""Command-line front end.

Exit status: 0 when the machine is safe up to the bound (or all obligations
hold), 2 when it is unsafe (or an obligation fails), 1 on any error.
"""

from __future__ import annotations

import argparse
import sys
from fractions import Fraction
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from . import ast as A
from .mdp import DEFAULT_STATE_CAP, ModelError, check_expectations
from .parser import MachineSyntaxError, parse_machine
from .prism import emit, emit_query
from .report import render
from .translate import MAX_COUNT, TranslationError, translate
from .wp import DEFAULT_WITNESS_CAP, StateBox, check_obligations

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_VIOLATION = 2
DEFAULT_MAX_COUNT = 2


class UsageError(Exception):
    pass


def parse_value(text: str) -> A.Number:
    """Integer, ``p/q`` or decimal literal, read exactly."""
    try:
        return A.normalize(Fraction(text.strip()))
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"not a number: {text!r}") from None


def parse_bindings(items: Sequence[str]) -> Dict[str, A.Number]:
    out: Dict[str, A.Number] = {}
    for item in items:
        name, sep, value = item.partition("=")
        name = name.strip()
        if not sep or not name.isidentifier():
            raise UsageError(f"expected NAME=VALUE, got {item!r}")
        if name == MAX_COUNT:
            raise UsageError("use --max-count to set MAX_COUNT")
        out[name] = parse_value(value)
    return out


def _load(path: str) -> A.Machine:
    p = Path(path)
    try:
        source = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror or exc}") from None
    return parse_machine(source)


def _write(path: Path, text: str) -> None:
    path.write_text(text, encoding="utf-8", newline="\n")


def run_translate(args) -> int:
    machine = _load(args.input)
    model = translate(machine, args.bound)
    out = Path(args.output) if args.output else Path(Path(args.input).stem + ".nm")
    props = out.with_suffix(".props")
    _write(out, emit(model))
    _write(props, emit_query(args.max_count))
    print(f"wrote {out} and {props}")
    print(f"modules: {model.main.name}, {model.counter.name}")
    print(f"commands: {len(model.main.commands)} ({', '.join(model.actions())})")
    print(f"formulas: {len(model.formulas)}")
    undefined = [c for c in model.undefined_constants() if c != MAX_COUNT]
    if undefined:
        print(f"undefined constants: {', '.join(undefined)}")
    return EXIT_OK


def run_check(args) -> int:
    machine = _load(args.input)
    report = check_expectations(machine, parse_bindings(args.const), args.max_count,
                                args.bound, args.state_cap)
    _emit(render(report, args.format), args.output)
    return EXIT_OK if report.first_violating_horizon is None else EXIT_VIOLATION


def _obligation_bound(machine: A.Machine, constants: Dict[str, A.Number], bound: Optional[int]) -> int:
    if bound is not None:
        return bound
    name = machine.params[0] if machine.params else "BOUND"
    if name in constants:
        value = constants[name]
        if not isinstance(value, int):
            raise UsageError(f"{name} must be an integer to bound the state box")
        return value
    raise UsageError(f"no state bound: pass --bound or --const {name}=N")


def run_obligations(args) -> int:
    machine = _load(args.input)
    constants = parse_bindings(args.const)
    bound = _obligation_bound(machine, constants, args.bound)
    box = StateBox.for_machine(machine, bound)
    summary = check_obligations(machine, box, constants, args.witness_cap)
    _emit(render(summary, args.format), args.output)
    return EXIT_OK if summary.holds else EXIT_VIOLATION


def _emit(text: str, output: Optional[str]) -> None:
    if output:
        _write(Path(output), text)
    else:
        sys.stdout.write(text)


def _non_negative(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError("must be non-negative")
    return value


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with status 1; status 2 is reserved for violations."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="pamn2prism",
        description="Translate probabilistic B machines to PRISM and check their expectations.",
        epilog="exit status: 0 safe / holds, 2 unsafe / fails, 1 error",
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("input", help="pAMN machine (.pb)")
        p.add_argument("-o", "--output", help="output path")
        p.add_argument("--bound", type=_non_negative, help="literal variable bound replacing the first parameter")

    t = sub.add_parser("translate", help="emit a PRISM model (.nm) and reward queries (.props)")
    common(t)
    t.add_argument("--max-count", type=_non_negative, default=DEFAULT_MAX_COUNT)
    t.set_defaults(func=run_translate)

    c = sub.add_parser("check", help="bounded check of the expectation by backward induction")
    common(c)
    c.add_argument("--const", action="append", default=[], metavar="NAME=VALUE")
    c.add_argument("--max-count", type=_non_negative, default=DEFAULT_MAX_COUNT)
    c.add_argument("--format", choices=("text", "structured"), default="text")
    c.add_argument("--state-cap", type=_non_negative, default=DEFAULT_STATE_CAP)
    c.set_defaults(func=run_check)

    o = sub.add_parser("obligations", help="check xi <= wp.Op.xi exhaustively on a bounded box")
    common(o)
    o.add_argument("--const", action="append", default=[], metavar="NAME=VALUE")
    o.add_argument("--format", choices=("text", "structured"), default="text")
    o.add_argument("--witness-cap", type=_non_negative, default=DEFAULT_WITNESS_CAP)
    o.set_defaults(func=run_obligations)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # usage errors and --help
        return exc.code if isinstance(exc.code, int) else EXIT_ERROR
    try:
        return args.func(args)
    except MachineSyntaxError as exc:
        for err in exc.errors:
            print(f"{args.input}: {err}", file=sys.stderr)
    except (UsageError, TranslationError, ModelError, A.EvaluationError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
