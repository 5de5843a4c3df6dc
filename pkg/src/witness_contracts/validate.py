"""Dynamic witness validation by interpreting the program from ``main``.

Every execution explored checks, in order of occurrence:

* each ``requires`` before the first statement of the contracted function,
* each ``ensures`` after the returned expression is evaluated (or at the
  end of a body without ``return``),
* each loop invariant before every evaluation of the loop condition,
* each location invariant before the located statement,
* the program's own ``assert`` and ``reach_error()`` calls.

A failing check on a concrete execution refutes the witness.  Exhausting the
input space without a failure is *not* a proof, and faults or resource
limits give ``unknown``.
"""

from __future__ import annotations

import json
import random
import sys
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Union

from .csrc import (
    ASSUME,
    NONDET,
    Assert,
    Assign,
    Block,
    Break,
    Continue,
    Decl,
    ExprStmt,
    FuncDef,
    If,
    ProgramAst,
    Return,
    Stmt,
    While,
)
from .diagnostics import DiagnosticError
from .expr import (
    Binary,
    Call,
    Cond,
    Context,
    EvalEnv,
    EvalFault,
    Expr,
    Lit,
    Unary,
    Var,
    binary_op,
    evaluate,
    unary_op,
    wrap32,
)
from .plan import Check, CheckPlan, build_plan
from .witness import WitnessSet

__all__ = [
    "Exhaustive", "Randomized", "Fixed", "InputStrategy",
    "Violated", "NoViolationFound", "Unknown", "Verdict",
    "RunResult", "execute", "validate", "input_vectors", "verdict_to_dict", "verdict_to_json",
    "SPECIFICATION",
]

SPECIFICATION = "specification"
DEFAULT_STEP_LIMIT = 100_000
DEFAULT_DEPTH_LIMIT = 200


# -- input strategies -------------------------------------------------------


@dataclass(frozen=True)
class Exhaustive:
    """Every value of ``[lo, hi]`` for each of the first ``max_calls`` nondet calls.

    Vectors are explored depth-first in lexicographic order.  Calls beyond
    ``max_calls`` draw from a PRNG seeded by the enumerated prefix, so each
    vector stays replayable.
    """

    lo: int = -8
    hi: int = 7
    max_calls: int = 4


@dataclass(frozen=True)
class Randomized:
    seed: int = 0
    samples: int = 100
    lo: int = -128
    hi: int = 127


@dataclass(frozen=True)
class Fixed:
    """Replay the given vectors; calls past the end of a vector read 0."""

    vectors: tuple[tuple[int, ...], ...]


InputStrategy = Union[Exhaustive, Randomized, Fixed]


class _Inputs:
    def __init__(self, prefix: list[int], strategy: InputStrategy, rng: random.Random | None = None):
        self.prefix = prefix
        self.strategy = strategy
        self.rng = rng
        self.consumed: list[int] = []

    def next(self) -> int:
        k = len(self.consumed)
        s = self.strategy
        if k < len(self.prefix):
            value = self.prefix[k]
        elif isinstance(s, Exhaustive):
            if k < s.max_calls:
                value = s.lo
            else:
                if self.rng is None:
                    self.rng = random.Random(repr(tuple(self.consumed[: s.max_calls])))
                value = self.rng.randint(s.lo, s.hi)
        elif isinstance(s, Randomized):
            value = self.rng.randint(s.lo, s.hi)
        else:
            value = 0
        self.consumed.append(value)
        return value


# -- verdicts ---------------------------------------------------------------


@dataclass(frozen=True)
class Violated:
    """A concrete execution on which ``clause`` of entry ``entry`` (or the program's own assert) fails."""

    entry: int | None
    clause: str
    input_vector: tuple[int, ...]
    step: int
    trace: tuple[tuple[str, str], ...] = ()
    line: int = 0
    column: int = 0

    @property
    def kind(self) -> str:
        return "violated"


@dataclass(frozen=True)
class NoViolationFound:
    inputs_explored: int
    entries_evaluated: int

    @property
    def kind(self) -> str:
        return "no_violation_found"


@dataclass(frozen=True)
class Unknown:
    reason: str
    inputs_explored: int = 0

    @property
    def kind(self) -> str:
        return "unknown"


Verdict = Union[Violated, NoViolationFound, Unknown]


# -- interpreter ------------------------------------------------------------


class _ReturnSignal(Exception):
    def __init__(self, value: int | None):
        self.value = value


class _BreakSignal(Exception):
    pass


class _ContinueSignal(Exception):
    pass


class _Stop(Exception):
    """Ends the execution: ``kind`` is pass | fail | fault | limit."""

    def __init__(self, kind: str, reason: str = "", origin: tuple[int | None, str] | None = None,
                 line: int = 0, column: int = 0):
        self.kind = kind
        self.reason = reason
        self.origin = origin
        self.line = line
        self.column = column


@dataclass
class _Activation:
    function: FuncDef
    scopes: list[dict[str, int]]
    pre: dict[str, int]


@dataclass
class RunResult:
    """Outcome of one execution.

    ``status`` is ``pass`` (normal termination, ``abort()`` or a failed
    assumption), ``fail``, ``fault`` or ``limit``.  ``events`` lists every
    evaluated check as ``(origin, passed)`` where origin is
    ``(entry index, clause)``, or ``(None, "specification")`` for program
    asserts without instrumentation origin.
    """

    status: str
    inputs: tuple[int, ...]
    steps: int
    events: list[tuple[tuple[int | None, str], bool]] = field(default_factory=list)
    origin: tuple[int | None, str] | None = None
    reason: str = ""
    line: int = 0
    column: int = 0
    trace: list[tuple[str, str]] = field(default_factory=list)


class Interpreter:
    def __init__(
        self,
        program: ProgramAst,
        plan: CheckPlan | None = None,
        *,
        step_limit: int = DEFAULT_STEP_LIMIT,
        depth_limit: int = DEFAULT_DEPTH_LIMIT,
        stop_on_failure: bool = True,
        record_trace: bool = False,
    ):
        self.program = program
        self.functions = program.functions
        self.plan = plan or CheckPlan()
        self.step_limit = step_limit
        self.depth_limit = depth_limit
        self.stop_on_failure = stop_on_failure
        self.record_trace = record_trace
        # each interpreted call uses a handful of Python frames
        sys.setrecursionlimit(max(sys.getrecursionlimit(), 40 * depth_limit + 1000))

    # -- bookkeeping

    def _tick(self) -> None:
        self.steps += 1
        if self.steps > self.step_limit:
            raise _Stop("limit", f"step limit {self.step_limit} exceeded")

    def _trace(self, point: str, event: str) -> None:
        if self.record_trace:
            self.trace.append((point, event))

    def _failed(self, origin: tuple[int | None, str], line: int, column: int, point: str) -> None:
        self.events.append((origin, False))
        self._trace(point, f"{_origin_text(origin)} fail")
        if self.stop_on_failure:
            raise _Stop("fail", origin=origin, line=line, column=column)

    # -- run

    def run(self, inputs: _Inputs) -> RunResult:
        self.inputs = inputs
        self.steps = 0
        self.events: list[tuple[tuple[int | None, str], bool]] = []
        self.trace: list[tuple[str, str]] = []
        self.globals: dict[str, int] = {}
        self.stack: list[_Activation] = []
        status, origin, reason, line, column = "pass", None, "", 0, 0
        try:
            for name, init in self.program.globals:
                self.globals[name] = 0 if init is None else self._eval(init, constant=True)
            main = self.functions.get("main")
            if main is None:
                raise _Stop("fault", "program has no main function")
            self._call(main, [0] * len(main.params))
        except _Stop as stop:
            if stop.kind != "pass":
                status, origin, reason = stop.kind, stop.origin, stop.reason
                line, column = stop.line, stop.column
        except EvalFault as exc:
            status, reason = "fault", f"program fault: {exc}"
        except RecursionError:
            status, reason = "limit", "interpreter recursion limit exceeded"
        if status == "pass" and any(not ok for _, ok in self.events):
            status = "fail"
            origin = next(o for o, ok in self.events if not ok)
        return RunResult(
            status, tuple(inputs.consumed), self.steps, self.events, origin, reason, line, column, self.trace
        )

    # -- checks

    def _check(self, check: Check, env: EvalEnv, context: Context, point: str, line: int, column: int) -> None:
        self._tick()
        try:
            ok = evaluate(check.expr, env, context) != 0
        except EvalFault as exc:
            raise _Stop("fault", f"entry {check.entry} {check.clause}: {exc}", check.origin) from None
        if ok:
            self.events.append((check.origin, True))
            self._trace(point, f"{_origin_text(check.origin)} pass")
        else:
            self._failed(check.origin, line, column, point)

    def _current_view(self) -> dict[str, int]:
        view = dict(self.globals)
        for scope in self.stack[-1].scopes:
            view.update(scope)
        return view

    def _check_invariants(self, checks: list[Check], stmt: Stmt) -> None:
        act = self.stack[-1]
        env = EvalEnv(self._current_view(), act.pre)
        point = f"{stmt.line}:{stmt.column}"
        for check in checks:
            self._check(check, env, Context.INVARIANT, point, stmt.line, stmt.column)

    def _check_ensures(self, f: FuncDef, result: int | None, line: int, column: int) -> None:
        checks = self.plan.ensures.get(f.name)
        if not checks:
            return
        act = self.stack[-1]
        env = EvalEnv(dict(self.globals), act.pre, result, frozenset(f.params))
        point = f"{f.name}:return@{line}:{column}" if line else f"{f.name}:end"
        for check in checks:
            self._check(check, env, Context.ENSURES, point, line or f.line, column or f.column)

    # -- calls

    def _call(self, f: FuncDef, args: list[int]) -> int | None:
        if len(self.stack) >= self.depth_limit:
            raise _Stop("limit", f"call depth limit {self.depth_limit} exceeded")
        if len(args) != len(f.params):
            raise _Stop("fault", f"{f.name} called with {len(args)} arguments, expects {len(f.params)}")
        params = dict(zip(f.params, args))
        act = _Activation(f, [params], {**self.globals, **params})
        self.stack.append(act)
        self._trace(f"{f.name}:entry", "call " + ", ".join(map(str, args)))
        try:
            requires = self.plan.requires.get(f.name)
            if requires:
                env = EvalEnv({**self.globals, **params}, act.pre, None, frozenset(f.params))
                for check in requires:
                    self._check(check, env, Context.REQUIRES, f"{f.name}:entry", f.line, f.column)
            try:
                self._exec_block(f.body, new_scope=False)
            except _ReturnSignal as ret:
                return ret.value
            self._check_ensures(f, None, 0, 0)
            return None
        finally:
            self.stack.pop()

    def _builtin(self, call: Call) -> int | None:
        name = call.name
        if name == NONDET:
            value = self.inputs.next()
            self._trace("nondet", str(value))
            return value
        if name == ASSUME:
            if self._eval(call.args[0]) == 0:
                raise _Stop("pass", "assumption failed")
            return 0
        if name in ("reach_error", "__VERIFIER_error"):
            line, column = self._current_stmt
            self._failed((None, SPECIFICATION), line, column, f"{line}:{column}")
            return 0
        if name in ("abort", "exit"):
            raise _Stop("pass", name)
        raise _Stop("fault", f"call to undefined function {name}")

    # -- expressions

    def _eval(self, e: Expr, constant: bool = False) -> int:
        if isinstance(e, Lit):
            return wrap32(e.value)
        if isinstance(e, Var):
            if constant:
                if e.name in self.globals:
                    return self.globals[e.name]
                raise _Stop("fault", f"non-constant global initializer uses {e.name}")
            for scope in reversed(self.stack[-1].scopes):
                if e.name in scope:
                    return scope[e.name]
            try:
                return self.globals[e.name]
            except KeyError:
                raise _Stop("fault", f"undeclared variable {e.name}") from None
        if isinstance(e, Binary):
            if e.op == "&&":
                return int(self._eval(e.left, constant) != 0 and self._eval(e.right, constant) != 0)
            if e.op == "||":
                return int(self._eval(e.left, constant) != 0 or self._eval(e.right, constant) != 0)
            return binary_op(e.op, self._eval(e.left, constant), self._eval(e.right, constant))
        if isinstance(e, Unary):
            return unary_op(e.op, self._eval(e.operand, constant))
        if isinstance(e, Cond):
            if self._eval(e.test, constant) != 0:
                return self._eval(e.then, constant)
            return self._eval(e.other, constant)
        if isinstance(e, Call):
            if constant:
                raise _Stop("fault", "call in global initializer")
            f = self.functions.get(e.name)
            if f is None:
                value = self._builtin(e)
            else:
                args = [self._eval(a) for a in e.args]
                value = self._call(f, args)
            if value is None:
                raise _Stop("fault", f"value of {e.name}() used but it returned no value")
            return value
        raise _Stop("fault", f"unsupported expression {type(e).__name__}")

    # -- statements

    def _assign(self, name: str, value: int) -> None:
        for scope in reversed(self.stack[-1].scopes):
            if name in scope:
                scope[name] = value
                return
        if name in self.globals:
            self.globals[name] = value
            return
        raise _Stop("fault", f"assignment to undeclared variable {name}")

    def _exec_block(self, block: Block, new_scope: bool = True) -> None:
        scopes = self.stack[-1].scopes
        if new_scope:
            scopes.append({})
        try:
            for s in block.stmts:
                self._exec(s)
        finally:
            if new_scope:
                scopes.pop()

    def _exec(self, stmt: Stmt) -> None:
        self._tick()
        key = (stmt.line, stmt.column)
        self._current_stmt = key
        if key[0]:
            checks = self.plan.location.get(key)
            if checks:
                self._check_invariants(checks, stmt)
        if isinstance(stmt, Assign):
            value = self._eval(stmt.value)
            if stmt.op != "=":
                value = binary_op(stmt.op[:-1], self._eval(Var(stmt.target)), value)
            self._assign(stmt.target, value)
        elif isinstance(stmt, Decl):
            scope = self.stack[-1].scopes[-1]
            for name, init in stmt.items:
                scope[name] = 0 if init is None else self._eval(init)
        elif isinstance(stmt, ExprStmt):
            e = stmt.expr
            if isinstance(e, Call) and e.name not in self.functions:
                self._builtin(e)
            elif isinstance(e, Call):
                self._call(self.functions[e.name], [self._eval(a) for a in e.args])
            else:
                self._eval(e)
        elif isinstance(stmt, If):
            if self._eval(stmt.cond) != 0:
                self._exec_nested(stmt.then)
            elif stmt.other is not None:
                self._exec_nested(stmt.other)
        elif isinstance(stmt, While):
            self._exec_loop(stmt)
        elif isinstance(stmt, Block):
            self._exec_block(stmt)
        elif isinstance(stmt, Return):
            f = self.stack[-1].function
            value = None if stmt.value is None else self._eval(stmt.value)
            self._trace(f"{stmt.line}:{stmt.column}", f"return {value}")
            self._check_ensures(f, value, stmt.line, stmt.column)
            raise _ReturnSignal(value)
        elif isinstance(stmt, Assert):
            point = f"{stmt.line}:{stmt.column}"
            origin = stmt.origin or (None, SPECIFICATION)
            if self._eval(stmt.cond) != 0:
                self.events.append((origin, True))
            else:
                self._failed(origin, stmt.line, stmt.column, point)
        elif isinstance(stmt, Break):
            raise _BreakSignal()
        elif isinstance(stmt, Continue):
            raise _ContinueSignal()
        else:
            raise _Stop("fault", f"unsupported statement {type(stmt).__name__}")

    def _exec_nested(self, stmt: Stmt) -> None:
        # a lone declaration as an if/loop body still gets its own scope
        if isinstance(stmt, Decl):
            scopes = self.stack[-1].scopes
            scopes.append({})
            try:
                self._exec(stmt)
            finally:
                scopes.pop()
        else:
            self._exec(stmt)

    def _exec_loop(self, loop: While) -> None:
        scopes = self.stack[-1].scopes
        scopes.append({})
        checks = self.plan.loop.get((loop.line, loop.column)) if loop.line else None
        try:
            if loop.init is not None:
                self._exec(loop.init)
            while True:
                self._tick()
                if checks:
                    self._check_invariants(checks, loop)
                if loop.cond is not None and self._eval(loop.cond) == 0:
                    break
                try:
                    self._exec_nested(loop.body)
                except _BreakSignal:
                    break
                except _ContinueSignal:
                    pass
                if loop.step is not None:
                    self._exec(loop.step)
        finally:
            scopes.pop()


def _origin_text(origin: tuple[int | None, str]) -> str:
    entry, clause = origin
    return clause if entry is None else f"entry {entry} {clause}"


# -- driver -----------------------------------------------------------------


def _exhaustive_runs(interp: Interpreter, s: Exhaustive) -> Iterator[RunResult]:
    prefix: list[int] = []
    while True:
        result = interp.run(_Inputs(prefix, s))
        yield result
        consumed = list(result.inputs)
        j = min(len(consumed), s.max_calls) - 1
        while j >= 0 and consumed[j] >= s.hi:
            j -= 1
        if j < 0:
            return
        prefix = consumed[:j] + [consumed[j] + 1]


def _runs(interp: Interpreter, s: InputStrategy) -> Iterator[RunResult]:
    if isinstance(s, Exhaustive):
        yield from _exhaustive_runs(interp, s)
    elif isinstance(s, Randomized):
        for k in range(s.samples):
            yield interp.run(_Inputs([], s, random.Random(f"{s.seed}:{k}")))
    else:
        for vector in s.vectors:
            yield interp.run(_Inputs(list(vector), s))


def execute(
    program: ProgramAst,
    plan: CheckPlan | None,
    strategy: InputStrategy,
    *,
    stop_on_failure: bool = True,
    step_limit: int = DEFAULT_STEP_LIMIT,
    depth_limit: int = DEFAULT_DEPTH_LIMIT,
    record_trace: bool = False,
) -> Iterator[RunResult]:
    """One :class:`RunResult` per input vector of ``strategy``, in exploration order."""
    interp = Interpreter(
        program, plan, step_limit=step_limit, depth_limit=depth_limit,
        stop_on_failure=stop_on_failure, record_trace=record_trace,
    )
    return _runs(interp, strategy)


def input_vectors(program: ProgramAst, strategy: InputStrategy, **limits) -> list[tuple[int, ...]]:
    """The input vectors ``strategy`` explores on ``program`` without any witness."""
    return [r.inputs for r in execute(program, None, strategy, **limits)]


def validate(
    program: ProgramAst,
    w: WitnessSet,
    strategy: InputStrategy | None = None,
    *,
    step_limit: int = DEFAULT_STEP_LIMIT,
    depth_limit: int = DEFAULT_DEPTH_LIMIT,
    column_base: int = 1,
) -> Verdict:
    """Check ``w`` on every execution that ``strategy`` explores."""
    strategy = strategy or Exhaustive()
    try:
        plan = build_plan(w, program, column_base=column_base)
    except DiagnosticError as exc:
        return Unknown(f"witness is not well-formed: {exc}")
    explored = 0
    evaluated = 0
    first_unknown: str | None = None
    limits = dict(step_limit=step_limit, depth_limit=depth_limit)
    for result in execute(program, plan, strategy, **limits):
        explored += 1
        evaluated += sum(1 for (entry, _), _ in result.events if entry is not None)
        if result.status == "fail":
            # replay with tracing; the run is deterministic
            traced = next(execute(program, plan, Fixed((result.inputs,)), record_trace=True, **limits))
            entry, clause = result.origin
            return Violated(
                entry, clause, result.inputs, traced.steps, tuple(traced.trace), result.line, result.column
            )
        if result.status in ("fault", "limit") and first_unknown is None:
            first_unknown = f"{result.reason} (input vector {list(result.inputs)})"
    if first_unknown is not None:
        return Unknown(first_unknown, explored)
    return NoViolationFound(explored, evaluated)


def verdict_to_dict(v: Verdict) -> dict:
    out: dict = {"verdict": v.kind}
    if isinstance(v, Violated):
        out.update(
            {
                "entry_index": v.entry,
                "clause": v.clause,
                "input_vector": list(v.input_vector),
                "step": v.step,
                "position": {"line": v.line, "column": v.column},
                "trace": [list(ev) for ev in v.trace],
                "stats": {"steps": v.step},
            }
        )
    elif isinstance(v, NoViolationFound):
        out["stats"] = {"inputs_explored": v.inputs_explored, "entries_evaluated": v.entries_evaluated}
    else:
        out["reason"] = v.reason
        out["stats"] = {"inputs_explored": v.inputs_explored}
    return out


def verdict_to_json(v: Verdict) -> str:
    return json.dumps(verdict_to_dict(v), indent=2)
