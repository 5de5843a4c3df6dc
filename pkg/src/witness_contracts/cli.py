"""Command-line driver: ``witness-contracts {lint,instrument,validate,lower}``."""

from __future__ import annotations

import argparse
import json
import sys
from typing import Sequence

from .csrc import ProgramAst, parse_program
from .diagnostics import Diagnostic, DiagnosticError, color_enabled, diagnostics_to_json, has_errors, sort_diagnostics
from .instrument import emit_c, instrument_program
from .lint import lint_all
from .lower import lower_to_v20
from .validate import (
    DEFAULT_DEPTH_LIMIT,
    DEFAULT_STEP_LIMIT,
    Exhaustive,
    NoViolationFound,
    Randomized,
    Violated,
    validate,
    verdict_to_dict,
)
from .witness import WitnessSet, read_witness, serialize_witness

EXIT_OK = 0
EXIT_VIOLATED = 1
EXIT_UNKNOWN = 2
EXIT_LINT = 3
EXIT_USAGE = 64


class UsageError(Exception):
    pass


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # argparse would exit 2
        raise UsageError(message)


def _build_parser() -> argparse.ArgumentParser:
    common = _ArgumentParser(add_help=False)
    common.add_argument("witness", help="witness YAML file")
    common.add_argument("program", help="preprocessed C file")
    common.add_argument("--format", choices=("text", "json"), default="text", dest="output_format")
    common.add_argument("--lenient", action="store_true", help="unknown keys and entry types are warnings")
    common.add_argument("--column-base", type=int, choices=(0, 1), default=1, help="column numbering of locations")

    parser = _ArgumentParser(prog="witness-contracts", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_ArgumentParser)

    sub.add_parser("lint", parents=[common], help="check a witness against a program")

    p = sub.add_parser("instrument", parents=[common], help="emit C with ghost variables and asserts")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--reach-error", action="store_true", help="encode checks as reach_error() calls")

    p = sub.add_parser("validate", parents=[common], help="check the witness on concrete executions")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--exhaustive", nargs=3, type=int, metavar=("LO", "HI", "MAXCALLS"))
    group.add_argument("--random", nargs=2, type=int, metavar=("SEED", "N"))
    p.add_argument("--step-limit", type=int, default=DEFAULT_STEP_LIMIT)
    p.add_argument("--depth-limit", type=int, default=DEFAULT_DEPTH_LIMIT)

    p = sub.add_parser("lower", parents=[common], help="translate to a 2.0 witness")
    p.add_argument("-o", "--output")
    p.add_argument("--residue")
    return parser


def _read(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def _write(path: str, text: str) -> None:
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc.strerror}") from None


def _report(diags: list[Diagnostic], fmt: str, out) -> None:
    if fmt == "json":
        print(diagnostics_to_json(diags), file=out)
        return
    color = color_enabled()
    for d in diags:
        print(d.format(color), file=out)


def _load(args) -> tuple[WitnessSet | None, ProgramAst | None, list[Diagnostic]]:
    witness_text = _read(args.witness)
    program_text = _read(args.program)
    witness, diags = read_witness(
        witness_text, strict=not args.lenient, source_name=args.witness, column_base=args.column_base
    )
    program = None
    try:
        program = parse_program(program_text, args.program)
    except DiagnosticError as exc:
        diags = diags + exc.diagnostics
    if witness is not None and program is not None:
        diags = diags + lint_all(witness, program, column_base=args.column_base)
    return witness, program, sort_diagnostics(diags)


def run(argv: Sequence[str] | None = None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        args = _build_parser().parse_args(argv)
        witness, program, diags = _load(args)
    except UsageError as exc:
        print(f"witness-contracts: {exc}", file=err)
        return EXIT_USAGE

    fmt = args.output_format
    if args.command == "lint" or has_errors(diags):
        if diags or (fmt == "json" and args.command == "lint"):
            _report(diags, fmt, out if args.command == "lint" else err)
        return EXIT_LINT if has_errors(diags) else EXIT_OK
    if diags:
        _report(diags, "text", err)

    try:
        if args.command == "instrument":
            text = emit_c(
                instrument_program(program, witness, column_base=args.column_base), reach_error=args.reach_error
            )
            _write(args.output, text)
            return EXIT_OK

        if args.command == "validate":
            if args.random:
                strategy = Randomized(seed=args.random[0], samples=args.random[1])
            elif args.exhaustive:
                lo, hi, max_calls = args.exhaustive
                if lo > hi or max_calls < 0:
                    raise UsageError("--exhaustive needs LO <= HI and MAXCALLS >= 0")
                strategy = Exhaustive(lo, hi, max_calls)
            else:
                strategy = Exhaustive()
            verdict = validate(
                program, witness, strategy,
                step_limit=args.step_limit, depth_limit=args.depth_limit, column_base=args.column_base,
            )
            if fmt == "json":
                print(json.dumps(verdict_to_dict(verdict), indent=2), file=out)
            else:
                print(_verdict_text(verdict), file=out)
            if isinstance(verdict, NoViolationFound):
                return EXIT_OK
            return EXIT_VIOLATED if isinstance(verdict, Violated) else EXIT_UNKNOWN

        lowered, residue = lower_to_v20(witness, program, column_base=args.column_base)
        text = serialize_witness(lowered)
        if args.output:
            _write(args.output, text)
        if args.residue:
            _write(args.residue, residue.to_json())
        if fmt == "json":
            payload = json.loads(residue.to_json())
            if not args.output:
                payload["witness"] = text
            print(json.dumps(payload, indent=2), file=out)
        else:
            if not args.output:
                out.write(text)
            for item in residue.items:
                print(
                    f"residue: entry {item.entry} {item.clause} in {item.function}: {', '.join(item.reasons)}",
                    file=out,
                )
        return EXIT_OK
    except UsageError as exc:
        print(f"witness-contracts: {exc}", file=err)
        return EXIT_USAGE


def _verdict_text(v) -> str:
    d = verdict_to_dict(v)
    if isinstance(v, Violated):
        what = v.clause if v.entry is None else f"entry {v.entry} ({v.clause})"
        return f"violated: {what} on input {list(v.input_vector)} at step {v.step}"
    if isinstance(v, NoViolationFound):
        return (
            f"no_violation_found: {v.inputs_explored} input vectors explored, "
            f"{v.entries_evaluated} checks evaluated"
        )
    return f"unknown: {d['reason']}"


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
