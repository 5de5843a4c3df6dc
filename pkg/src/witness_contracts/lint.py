"""Static well-formedness rules for a witness against a program.

Rule ids:

=====  =====================================================================
R1     location resolves to a function definition / loop / statement
R2     clause parses in its declared format and context
R3     contract clauses only use globals and parameters of the function
R4     no ``\\result`` in contracts of ``void`` functions
R5     ACSL keywords require format ``acsl_expression``
R6     invariant variables are in scope; ``\\at`` only of globals/parameters
R7     ``\\at`` uses the label ``Pre``
R8     the program does not use the reserved ghost prefix ``__wit_``
R9     the program defines exactly one ``main`` and no duplicate functions
W1     duplicate entry (warning)
W2     entry is trivially true (warning)
=====  =====================================================================
"""

from __future__ import annotations

from collections import Counter

from .csrc import FuncDef, ProgramAst, ProgramIndex, identifiers, resolve_location
from .diagnostics import Diagnostic, DiagnosticError, Severity, sort_diagnostics
from .expr import Context, ExprError, ResultRef, free_variables, is_trivially_true, parse_expression, walk
from .witness import Entry, WitnessSet

GHOST_PREFIX = "__wit_"

_CONTEXTS = {"requires": Context.REQUIRES, "ensures": Context.ENSURES, "invariant": Context.INVARIANT}
_PARSE_RULES = {"syntax": "R2", "context": "R2", "argument": "R2", "format": "R5", "label": "R7"}


def lint_program(program: ProgramAst) -> list[Diagnostic]:
    """Program-level rules R8 and R9, independent of any witness."""
    diags = []
    file_name = program.file_name or ""
    defs = Counter(it.name for it in program.items if isinstance(it, FuncDef))
    if defs.get("main", 0) == 0:
        diags.append(Diagnostic("R9", Severity.ERROR, "program defines no main function", "", file_name))
    for name, count in sorted(defs.items()):
        if count > 1:
            diags.append(Diagnostic("R9", Severity.ERROR, f"function {name} is defined {count} times", "", file_name))
    for name in sorted(identifiers(program)):
        if name.startswith(GHOST_PREFIX):
            diags.append(
                Diagnostic("R8", Severity.ERROR, f"identifier {name} uses the reserved prefix {GHOST_PREFIX}", "", file_name)
            )
    return diags


def _entry_rules(i: int, entry: Entry, index: ProgramIndex, column_base: int) -> list[Diagnostic]:
    loc = entry.location
    diags: list[Diagnostic] = []
    base = f"content[{i}].invariant"

    def report(rule: str, message: str, key: str, severity: Severity = Severity.ERROR) -> None:
        diags.append(Diagnostic(rule, severity, message, f"{base}.{key}", loc.file_name, loc.line, loc.column or 0))

    point = None
    try:
        point = resolve_location(loc, index, entry.kind, column_base=column_base)
    except DiagnosticError as exc:
        for d in exc.diagnostics:
            report("R1", d.message, "location")

    parsed = []
    for clause, text in entry.clauses():
        key = clause if entry.is_contract else "value"
        try:
            expr = parse_expression(text, entry.format, _CONTEXTS[clause])
        except ExprError as exc:
            report(_PARSE_RULES[exc.code], f"{clause}: {exc.message} (offset {exc.offset})", key)
            continue
        parsed.append((clause, key, expr))

    if all(is_trivially_true(e) for _, _, e in parsed) and len(parsed) == len(entry.clauses()):
        report("W2", "entry is trivially true", "type", Severity.WARNING)

    if point is None:
        return diags
    f = index.functions[point.function]
    params = set(f.params)
    own = index.globals | params
    for clause, key, expr in parsed:
        if entry.is_contract:
            if clause == "ensures" and f.returns_void and any(isinstance(n, ResultRef) for n in walk(expr)):
                report("R4", f"\\result used in a contract of void function {f.name}", key)
            for name, kind in sorted(free_variables(expr), key=str):
                if kind != "result" and name not in own:
                    report("R3", f"{clause} uses {name}, which is neither a global nor a parameter of {f.name}", key)
        else:
            visible = index.visible_at(point)
            for name, kind in sorted(free_variables(expr), key=str):
                if kind == "current" and name not in visible:
                    report("R6", f"{name} is not in scope at the invariant location", key)
                elif kind == "pre" and name not in own:
                    report("R6", f"\\at({name}, Pre) needs a global or a parameter of {f.name}", key)
    return diags


def lint_witness(w: WitnessSet, program: ProgramAst, *, column_base: int = 1) -> list[Diagnostic]:
    """All entry rule violations, sorted by (file, line, column, rule id).

    Program-level rules are separate (:func:`lint_program`) so that the
    empty witness is clean against any program.
    """
    index = ProgramIndex(program)
    diags: list[Diagnostic] = []
    seen: dict[Entry, int] = {}
    for i, entry in enumerate(w.entries):
        diags.extend(_entry_rules(i, entry, index, column_base))
        if entry in seen:
            loc = entry.location
            diags.append(
                Diagnostic(
                    "W1", Severity.WARNING, f"duplicate of entry {seen[entry]}", f"content[{i}]",
                    loc.file_name, loc.line, loc.column or 0,
                )
            )
        else:
            seen[entry] = i
    return sort_diagnostics(diags)


def lint_all(w: WitnessSet, program: ProgramAst, *, column_base: int = 1) -> list[Diagnostic]:
    return sort_diagnostics(lint_program(program) + lint_witness(w, program, column_base=column_base))
