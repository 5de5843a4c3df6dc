"""Source-to-source instrumentation: witness entries become ghost variables and asserts.

For a function ``f`` with entries the rewrite produces::

    int f(int x) {
        int __wit_pre_x = x;            /* entry snapshots for \\old, \\at and parameters */
        int __wit_result;
        assert(<requires>);
        ...
        { __wit_result = <e>; assert(<ensures'>); return __wit_result; }   /* each return e; */
    }

Loop invariants are asserted before every evaluation of the loop condition,
location invariants before their statement.  Statements keep their source
positions; inserted statements have position ``0:0``.
"""

from __future__ import annotations

from dataclasses import replace

from .csrc import (
    Assert,
    Assign,
    Block,
    Break,
    Continue,
    Decl,
    ExprStmt,
    FuncDecl,
    FuncDef,
    GlobalDecl,
    If,
    ProgramAst,
    Return,
    Stmt,
    While,
    can_complete,
)
from .expr import AtPre, Expr, Lit, OldOf, ResultRef, Unary, Var, print_expression, transform
from .plan import Check, CheckPlan, build_plan
from .witness import WitnessSet

GHOST_PREFIX = "__wit_"
RESULT_GHOST = "__wit_result"


def pre_ghost(name: str) -> str:
    return f"{GHOST_PREFIX}pre_{name}"


def local_ghost(name: str) -> str:
    return f"{GHOST_PREFIX}local_{name}"


class _FunctionRewriter:
    def __init__(self, f: FuncDef, plan: CheckPlan):
        self.f = f
        self.plan = plan
        self.params = set(f.params)
        self.ensures = plan.ensures.get(f.name, [])
        self.requires = plan.requires.get(f.name, [])
        # globals read by ensures; locals with these names are renamed so the
        # asserts at return points still see the global
        self.ensures_globals = {
            n.name
            for c in self.ensures
            for n in _nodes(c.expr)
            if isinstance(n, Var) and n.name not in self.params
        }
        self.scopes: list[dict[str, str]] = [{}]
        # per enclosing loop: statements to run before a ``continue`` (None if untouched)
        self.loops: list[list[Stmt] | None] = []

    # -- names

    def resolve(self, name: str) -> str:
        for scope in reversed(self.scopes):
            if name in scope:
                return scope[name]
        return name

    def rename_expr(self, e: Expr) -> Expr:
        if not any(self.scopes):
            return e
        return transform(e, lambda n: Var(self.resolve(n.name)) if isinstance(n, Var) else None)

    def declare(self, name: str) -> str:
        new = local_ghost(name) if name in self.ensures_globals else name
        self.scopes[-1][name] = new
        return new

    # -- clause translation

    def ghosts_needed(self) -> list[str]:
        names = set(self.plan.pre_names(self.f.name))
        for c in self.ensures:
            names.update(n.name for n in _nodes(c.expr) if isinstance(n, Var) and n.name in self.params)
        return sorted(names)

    def ensures_expr(self, check: Check) -> Expr:
        def sub(n: Expr) -> Expr | None:
            if isinstance(n, ResultRef):
                return Var(RESULT_GHOST)
            if isinstance(n, OldOf):
                return Var(pre_ghost(n.name))
            if isinstance(n, Var) and n.name in self.params:
                return Var(pre_ghost(n.name))
            return None

        return transform(check.expr, sub)

    def invariant_expr(self, check: Check) -> Expr:
        e = self.rename_expr(check.expr)
        return transform(e, lambda n: Var(pre_ghost(n.name)) if isinstance(n, AtPre) else None)

    def asserts(self, checks: list[Check], translate) -> list[Stmt]:
        return [Assert(translate(c), c.origin) for c in checks]

    # -- statements

    def rewrite_function(self) -> FuncDef:
        head: list[Stmt] = [Decl(((pre_ghost(n), Var(n)),)) for n in self.ghosts_needed()]
        if self.ensures and not self.f.returns_void:
            head.append(Decl(((RESULT_GHOST, None),)))
        head += self.asserts(self.requires, lambda c: c.expr)
        self.scopes = [{}]
        body = self.rewrite_block_items(self.f.body.stmts)
        if self.ensures and can_complete(self.f.body):
            body += self.asserts(self.ensures, self.ensures_expr)
        new_body = replace(self.f.body, stmts=tuple(head + body))
        return replace(self.f, body=new_body)

    def rewrite_block_items(self, stmts: tuple[Stmt, ...]) -> list[Stmt]:
        out: list[Stmt] = []
        for s in stmts:
            out.extend(self.rewrite(s))
        return out

    def single(self, stmts: list[Stmt]) -> Stmt:
        return stmts[0] if len(stmts) == 1 else Block(tuple(stmts))

    def nested(self, s: Stmt) -> Stmt:
        self.scopes.append({})
        try:
            return self.single(self.rewrite(s))
        finally:
            self.scopes.pop()

    def location_asserts(self, s: Stmt) -> list[Stmt]:
        if not s.line:
            return []
        return self.asserts(self.plan.location.get((s.line, s.column), []), self.invariant_expr)

    def rewrite(self, s: Stmt) -> list[Stmt]:
        prefix = self.location_asserts(s)
        return prefix + [self.rewrite_core(s)]

    def rewrite_core(self, s: Stmt) -> Stmt:
        if isinstance(s, Decl):
            items = tuple((self.declare(name), None if init is None else self.rename_expr(init)) for name, init in s.items)
            # initializers see the outer binding of the declared name only in
            # their own declarator; C scoping makes this equivalent here
            return replace(s, items=items)
        if isinstance(s, Assign):
            return replace(s, target=self.resolve(s.target), value=self.rename_expr(s.value))
        if isinstance(s, ExprStmt):
            return replace(s, expr=self.rename_expr(s.expr))
        if isinstance(s, Assert):
            return replace(s, cond=self.rename_expr(s.cond))
        if isinstance(s, If):
            then = self.nested(s.then)
            other = None if s.other is None else self.nested(s.other)
            return replace(s, cond=self.rename_expr(s.cond), then=then, other=other)
        if isinstance(s, Block):
            self.scopes.append({})
            try:
                return replace(s, stmts=tuple(self.rewrite_block_items(s.stmts)))
            finally:
                self.scopes.pop()
        if isinstance(s, Return):
            return self.rewrite_return(s)
        if isinstance(s, Continue):
            pending = self.loops[-1] if self.loops else None
            if pending:
                return Block(tuple(pending) + (s,))
            return s
        if isinstance(s, Break):
            return s
        if isinstance(s, While):
            return self.rewrite_loop(s)
        raise TypeError(f"cannot instrument {type(s).__name__}")

    def rewrite_return(self, s: Return) -> Stmt:
        if not self.ensures:
            return replace(s, value=None if s.value is None else self.rename_expr(s.value))
        checks = self.asserts(self.ensures, self.ensures_expr)
        if s.value is None:
            return Block(tuple(checks) + (s,))
        store = Assign(RESULT_GHOST, "=", self.rename_expr(s.value))
        return Block((store, *checks, replace(s, value=Var(RESULT_GHOST))))

    def rewrite_loop(self, loop: While) -> Stmt:
        key = (loop.line, loop.column)
        checks = self.plan.loop.get(key, []) if loop.line else []
        located = [x for x in (loop.init, loop.step) if x is not None and x.line and (x.line, x.column) in self.plan.location]
        self.scopes.append({})
        try:
            if not checks and not located:
                init = None if loop.init is None else self.rewrite_core(loop.init)
                cond = None if loop.cond is None else self.rename_expr(loop.cond)
                step = None if loop.step is None else self.rewrite_core(loop.step)
                self.loops.append(None)
                try:
                    body = self.nested(loop.body)
                finally:
                    self.loops.pop()
                return replace(loop, init=init, cond=cond, step=step, body=body)

            # desugar: { init; assert(inv); while (cond) { body; step; assert(inv); } }
            init = [] if loop.init is None else self.rewrite(loop.init)
            cond = Lit(1) if loop.cond is None else self.rename_expr(loop.cond)
            inv = self.asserts(checks, self.invariant_expr)
            step = [] if loop.step is None else self.rewrite(loop.step)
            tail = step + inv
            self.loops.append(tail)
            try:
                body = self.nested(loop.body)
            finally:
                self.loops.pop()
            body_items = list(body.stmts) if isinstance(body, Block) and body.line == 0 else [body]
            inner = While(cond, Block(tuple(body_items + tail)), None, None, False, loop.line, loop.column)
            return Block(tuple(init + inv + [inner]))
        finally:
            self.scopes.pop()


def _nodes(e: Expr):
    from .expr import walk

    return walk(e)


def instrument_program(
    program: ProgramAst, w: WitnessSet, *, column_base: int = 1, plan: CheckPlan | None = None
) -> ProgramAst:
    """Rewrite ``program`` so that every witness entry is enforced by an ``assert``.

    The witness must be lint-clean; asserts carry ``origin = (entry, clause)``.
    """
    plan = plan or build_plan(w, program, column_base=column_base)
    targets = plan.functions_with_checks()
    items = []
    for item in program.items:
        if isinstance(item, FuncDef) and item.name in targets:
            item = _FunctionRewriter(item, plan).rewrite_function()
        items.append(item)
    return replace(program, items=tuple(items))


# -- C emission -------------------------------------------------------------

PRELUDE_ASSERT = """\
#include <assert.h>
extern int __VERIFIER_nondet_int(void);
extern void __VERIFIER_assume(int cond);
extern void abort(void);
extern void reach_error(void);
"""

PRELUDE_REACH_ERROR = """\
extern int __VERIFIER_nondet_int(void);
extern void __VERIFIER_assume(int cond);
extern void abort(void);
extern void reach_error(void);
"""


class _Emitter:
    def __init__(self, reach_error: bool):
        self.reach_error = reach_error
        self.lines: list[str] = []

    def out(self, depth: int, text: str) -> None:
        self.lines.append("    " * depth + text)

    @staticmethod
    def params(params: tuple[str, ...]) -> str:
        return ", ".join(f"int {p}" for p in params) if params else "void"

    @staticmethod
    def decl_text(d: Decl) -> str:
        parts = [name if init is None else f"{name} = {print_expression(init)}" for name, init in d.items]
        return "int " + ", ".join(parts) + ";"

    @staticmethod
    def simple_text(s: Stmt) -> str:
        if isinstance(s, Assign):
            return f"{s.target} {s.op} {print_expression(s.value)}"
        if isinstance(s, ExprStmt):
            return print_expression(s.expr)
        raise TypeError(f"not a simple statement: {type(s).__name__}")

    def item(self, item) -> None:
        if isinstance(item, GlobalDecl):
            self.out(0, self.decl_text(item.decl))
        elif isinstance(item, FuncDecl):
            self.out(0, f"{item.return_type} {item.name}({self.params(item.params)});")
        else:
            self.out(0, f"{item.return_type} {item.name}({self.params(item.params)}) {{")
            for s in item.body.stmts:
                self.stmt(s, 1)
            self.out(0, "}")

    def body(self, s: Stmt, depth: int, head: str) -> None:
        if isinstance(s, Block):
            self.out(depth, head + " {")
            for inner in s.stmts:
                self.stmt(inner, depth + 1)
            self.out(depth, "}")
        else:
            self.out(depth, head)
            self.stmt(s, depth + 1)

    def stmt(self, s: Stmt, depth: int) -> None:
        if isinstance(s, Decl):
            self.out(depth, self.decl_text(s))
        elif isinstance(s, (Assign, ExprStmt)):
            self.out(depth, self.simple_text(s) + ";")
        elif isinstance(s, Assert):
            cond = print_expression(s.cond)
            if self.reach_error:
                self.out(depth, f"if ({print_expression(Unary('!', s.cond))}) reach_error();")
            else:
                self.out(depth, f"assert({cond});")
        elif isinstance(s, Return):
            self.out(depth, "return;" if s.value is None else f"return {print_expression(s.value)};")
        elif isinstance(s, Break):
            self.out(depth, "break;")
        elif isinstance(s, Continue):
            self.out(depth, "continue;")
        elif isinstance(s, Block):
            self.out(depth, "{")
            for inner in s.stmts:
                self.stmt(inner, depth + 1)
            self.out(depth, "}")
        elif isinstance(s, If):
            self.body(s.then, depth, f"if ({print_expression(s.cond)})")
            if s.other is not None:
                self.body(s.other, depth, "else")
        elif isinstance(s, While):
            cond = "" if s.cond is None else print_expression(s.cond)
            if s.is_for or s.init is not None or s.step is not None:
                if s.init is None:
                    init = ";"
                elif isinstance(s.init, Decl):
                    init = self.decl_text(s.init)
                else:
                    init = self.simple_text(s.init) + ";"
                step = "" if s.step is None else self.simple_text(s.step)
                head = f"for ({init} {cond}; {step})".replace("( ", "(").replace("; )", ";)")
            else:
                head = f"while ({cond or '1'})"
            self.body(s.body, depth, head)
        else:
            raise TypeError(f"cannot emit {type(s).__name__}")


def emit_c(program: ProgramAst, *, reach_error: bool = False) -> str:
    """C text for ``program`` with a prelude declaring the verifier builtins."""
    em = _Emitter(reach_error)
    for item in program.items:
        em.item(item)
        em.lines.append("")
    prelude = PRELUDE_REACH_ERROR if reach_error else PRELUDE_ASSERT
    return prelude + ("\n" + "\n".join(em.lines) if em.lines else "")
