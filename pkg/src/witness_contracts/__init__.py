"""Tooling for correctness witnesses with function contracts (format 2.1).

Typical use::

    from witness_contracts import parse_witness, parse_program, validate
    verdict = validate(parse_program(c_text, "p.c"), parse_witness(yaml_text))
"""

from .csrc import ProgramAst, parse_program
from .diagnostics import Diagnostic, DiagnosticError, Severity
from .expr import Context, EvalEnv, ExprError, evaluate, parse_expression, print_expression
from .instrument import emit_c, instrument_program
from .lint import lint_all, lint_program, lint_witness
from .lower import ResidueReport, lower_to_v20
from .validate import Exhaustive, Fixed, NoViolationFound, Randomized, Unknown, Violated, validate
from .witness import (
    Entry,
    EntryKind,
    ExprFormat,
    Location,
    Metadata,
    WitnessSet,
    parse_witness,
    read_witness,
    schema_validate,
    serialize_witness,
)

__version__ = "0.1.0"

__all__ = [
    "Context", "Diagnostic", "DiagnosticError", "Entry", "EntryKind", "EvalEnv", "Exhaustive",
    "ExprError", "ExprFormat", "Fixed", "Location", "Metadata", "NoViolationFound", "ProgramAst",
    "Randomized", "ResidueReport", "Severity", "Unknown", "Violated", "WitnessSet", "emit_c",
    "evaluate", "instrument_program", "lint_all", "lint_program", "lint_witness", "lower_to_v20",
    "parse_expression", "parse_program", "parse_witness", "print_expression", "read_witness",
    "schema_validate", "serialize_witness", "validate",
]
