"""Resolved witness entries: which clause is checked at which program point."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field

from .csrc import (
    BeforeStatement,
    FunctionEntry,
    LoopHead,
    ProgramAst,
    ProgramIndex,
    ProgramPoint,
    resolve_location,
)
from .diagnostics import Diagnostic, DiagnosticError, Severity
from .expr import AtPre, Context, Expr, ExprError, OldOf, is_trivially_true, parse_expression, walk
from .witness import WitnessSet

Pos = tuple[int, int]


@dataclass(frozen=True)
class Check:
    entry: int
    clause: str  # "requires" | "ensures" | "invariant"
    expr: Expr
    point: ProgramPoint

    @property
    def origin(self) -> tuple[int, str]:
        return (self.entry, self.clause)


@dataclass
class CheckPlan:
    requires: dict[str, list[Check]] = field(default_factory=lambda: defaultdict(list))
    ensures: dict[str, list[Check]] = field(default_factory=lambda: defaultdict(list))
    loop: dict[Pos, list[Check]] = field(default_factory=lambda: defaultdict(list))
    location: dict[Pos, list[Check]] = field(default_factory=lambda: defaultdict(list))
    points: list[ProgramPoint | None] = field(default_factory=list)

    def all_checks(self):
        for table in (self.requires, self.ensures, self.loop, self.location):
            for checks in table.values():
                yield from checks

    def functions_with_checks(self) -> set[str]:
        return {c.point.function for c in self.all_checks()}

    def pre_names(self, function: str) -> set[str]:
        """Names whose entry value ``function``'s clauses read through ``\\old``/``\\at``."""
        names = set()
        for c in self.all_checks():
            if c.point.function == function:
                names.update(n.name for n in walk(c.expr) if isinstance(n, (OldOf, AtPre)))
        return names

    @property
    def empty(self) -> bool:
        return not any(True for _ in self.all_checks())


_CONTEXTS = {"requires": Context.REQUIRES, "ensures": Context.ENSURES, "invariant": Context.INVARIANT}


def build_plan(
    w: WitnessSet, program: ProgramAst | ProgramIndex, *, column_base: int = 1, keep_trivial: bool = False
) -> CheckPlan:
    """Resolve every entry and parse every clause.

    Clauses that are a non-zero literal (including absent ``requires`` /
    ``ensures``, which default to ``1``) are dropped unless ``keep_trivial``.

    Raises:
        DiagnosticError: if any location does not resolve or a clause does not parse.
    """
    index = program if isinstance(program, ProgramIndex) else ProgramIndex(program)
    plan = CheckPlan()
    errors: list[Diagnostic] = []
    for i, entry in enumerate(w.entries):
        try:
            point = resolve_location(entry.location, index, entry.kind, column_base=column_base)
        except DiagnosticError as exc:
            errors.extend(exc.diagnostics)
            plan.points.append(None)
            continue
        plan.points.append(point)
        for clause, text in entry.clauses():
            try:
                expr = parse_expression(text, entry.format, _CONTEXTS[clause])
            except ExprError as exc:
                errors.append(
                    Diagnostic("R2", Severity.ERROR, f"{clause}: {exc.message}", f"content[{i}]")
                )
                continue
            if is_trivially_true(expr) and not keep_trivial:
                continue
            check = Check(i, clause, expr, point)
            if clause == "requires":
                plan.requires[point.function].append(check)
            elif clause == "ensures":
                plan.ensures[point.function].append(check)
            elif isinstance(point, LoopHead):
                plan.loop[(point.line, point.column)].append(check)
            elif isinstance(point, BeforeStatement):
                plan.location[(point.line, point.column)].append(check)
            else:  # pragma: no cover - resolve_location never yields this for invariants
                assert isinstance(point, FunctionEntry)
    if errors:
        raise DiagnosticError(errors)
    return plan
