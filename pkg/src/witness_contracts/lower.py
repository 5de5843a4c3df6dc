"""Lower 2.1 witnesses to format 2.0 where the older format can express the entry.

``requires`` becomes a location invariant at the first statement of the
function body.  An ``ensures`` over globals only becomes one location
invariant per ``return`` statement.  Everything else goes to the residue
with a reason code:

``RESULT_REF``            uses ``\\result``
``OLD_REF``               uses ``\\old``
``PARAM_REF``             reads a parameter (its pre-call value in ``ensures``)
``AT_PRE``                invariant uses ``\\at(_, Pre)``
``NO_STATEMENT_POSITION`` return point is the end of the body, or the body is empty
``RETURN_SIDE_EFFECT``    the returned expression calls a function
``SHADOWED_GLOBAL``       a local shadows a global of the clause at the return
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

from .csrc import ProgramAst, ProgramIndex, ReturnPoint, enumerate_return_points
from .expr import AtPre, Call, Context, OldOf, ResultRef, Var, is_trivially_true, parse_expression, walk
from .witness import VERSION_2_0, Entry, EntryKind, ExprFormat, Location, WitnessSet
from .plan import build_plan

RESULT_REF = "RESULT_REF"
OLD_REF = "OLD_REF"
PARAM_REF = "PARAM_REF"
AT_PRE = "AT_PRE"
NO_STATEMENT_POSITION = "NO_STATEMENT_POSITION"
RETURN_SIDE_EFFECT = "RETURN_SIDE_EFFECT"
SHADOWED_GLOBAL = "SHADOWED_GLOBAL"


@dataclass(frozen=True)
class ResidueItem:
    entry: int
    clause: str
    reasons: tuple[str, ...]
    line: int
    column: int
    function: str

    def to_dict(self) -> dict:
        return {
            "entry_index": self.entry,
            "clause": self.clause,
            "reasons": list(self.reasons),
            "function": self.function,
            "position": {"line": self.line, "column": self.column},
        }


@dataclass
class ResidueReport:
    items: list[ResidueItem] = field(default_factory=list)
    # for each entry of the lowered witness: the (entry index, clause) it came from
    origins: list[tuple[int, str]] = field(default_factory=list)

    @property
    def empty(self) -> bool:
        return not self.items

    def reasons(self) -> set[str]:
        return {r for item in self.items for r in item.reasons}

    def to_json(self) -> str:
        return json.dumps(
            {
                "residue": [i.to_dict() for i in self.items],
                "origins": [{"entry_index": e, "clause": c} for e, c in self.origins],
            },
            indent=2,
        )


def _clause_reasons(expr, params: set[str]) -> list[str]:
    reasons = []
    nodes = list(walk(expr))
    if any(isinstance(n, ResultRef) for n in nodes):
        reasons.append(RESULT_REF)
    if any(isinstance(n, OldOf) for n in nodes):
        reasons.append(OLD_REF)
    if any(isinstance(n, Var) and n.name in params for n in nodes):
        reasons.append(PARAM_REF)
    return reasons


def lower_to_v20(
    w: WitnessSet, program: ProgramAst, *, column_base: int = 1
) -> tuple[WitnessSet, ResidueReport]:
    """Translate ``w`` to a 2.0 witness; inexpressible clauses are reported, not dropped silently."""
    index = ProgramIndex(program)
    plan = build_plan(w, index, column_base=column_base, keep_trivial=True)
    report = ResidueReport()
    out: list[Entry] = []

    def emit(entry: Entry, line: int, column: int, function: str, value: str, origin: tuple[int, str]) -> None:
        loc = Location(entry.location.file_name, line, column + column_base - 1, function)
        out.append(Entry(EntryKind.LOCATION_INVARIANT, loc, ExprFormat.C_EXPRESSION, value=value))
        report.origins.append(origin)

    for i, entry in enumerate(w.entries):
        point = plan.points[i]
        if not entry.is_contract:
            expr = parse_expression(entry.value, entry.format, Context.INVARIANT)
            if any(isinstance(n, AtPre) for n in walk(expr)):
                report.items.append(
                    ResidueItem(i, "invariant", (AT_PRE,), point.line, point.column, point.function)
                )
                continue
            out.append(replace(entry, format=ExprFormat.C_EXPRESSION))
            report.origins.append((i, "invariant"))
            continue

        f = index.functions[point.function]
        params = set(f.params)
        requires = parse_expression(entry.requires_text, entry.format, Context.REQUIRES)
        if not is_trivially_true(requires):
            if f.body.stmts:
                first = f.body.stmts[0]
                emit(entry, first.line, first.column, f.name, entry.requires_text, (i, "requires"))
            else:
                report.items.append(
                    ResidueItem(i, "requires", (NO_STATEMENT_POSITION,), f.line, f.column, f.name)
                )

        ensures = parse_expression(entry.ensures_text, entry.format, Context.ENSURES)
        if is_trivially_true(ensures):
            continue
        reasons = _clause_reasons(ensures, params)
        if reasons:
            report.items.append(ResidueItem(i, "ensures", tuple(reasons), f.line, f.column, f.name))
            continue
        names = {n.name for n in walk(ensures) if isinstance(n, Var)}
        for rp in enumerate_return_points(f):
            if rp.is_body_end:
                report.items.append(
                    ResidueItem(i, "ensures", (NO_STATEMENT_POSITION,), f.line, f.column, f.name)
                )
                continue
            stmt_info = index.statements[(rp.line, rp.column)]
            local_names = stmt_info.locals
            site_reasons = []
            if stmt_info.stmt.value is not None and any(isinstance(n, Call) for n in walk(stmt_info.stmt.value)):
                site_reasons.append(RETURN_SIDE_EFFECT)
            if names & local_names:
                site_reasons.append(SHADOWED_GLOBAL)
            if site_reasons:
                report.items.append(
                    ResidueItem(i, "ensures", tuple(site_reasons), rp.line, rp.column, f.name)
                )
                continue
            emit(entry, rp.line, rp.column, f.name, entry.ensures_text, (i, "ensures"))

    metadata = replace(w.metadata, format_version=VERSION_2_0)
    return WitnessSet(metadata, tuple(out)), report


__all__ = [
    "ResidueItem", "ResidueReport", "lower_to_v20", "ReturnPoint",
    "RESULT_REF", "OLD_REF", "PARAM_REF", "AT_PRE", "NO_STATEMENT_POSITION",
    "RETURN_SIDE_EFFECT", "SHADOWED_GLOBAL",
]
