"""Front end for the supported C subset.

Supported: ``int`` globals with constant initializers, ``int``/``void``
functions with ``int`` parameters, block-scoped ``int`` locals, assignment
(including compound forms and ``++``/``--`` statements), ``if``/``else``,
``while``, ``for``, ``break``, ``continue``, ``return``, direct calls,
``assert(e)`` and the SV-COMP builtins ``__VERIFIER_nondet_int()``,
``__VERIFIER_assume(e)``, ``reach_error()`` and ``abort()``.

Input must already be preprocessed; directive lines are skipped.  Every
statement records the 1-based line and byte column of its first character.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Iterator, Union

from .diagnostics import Diagnostic, DiagnosticError, Severity
from .expr import Call, Expr, ExprError, ExprParser, Token, Var, tokenize, walk
from .witness import EntryKind, Location

__all__ = [
    "Decl", "Assign", "ExprStmt", "If", "While", "Return", "Break", "Continue",
    "Block", "Assert", "Stmt", "FuncDef", "FuncDecl", "GlobalDecl", "ProgramAst",
    "FunctionEntry", "LoopHead", "BeforeStatement", "ReturnPoint", "ProgramPoint",
    "ProgramIndex", "parse_program", "resolve_location", "enumerate_return_points",
    "iter_statements", "BUILTINS", "NONDET",
]

NONDET = "__VERIFIER_nondet_int"
ASSUME = "__VERIFIER_assume"
BUILTINS = frozenset(
    {NONDET, ASSUME, "__VERIFIER_error", "reach_error", "abort", "assert", "__assert_fail", "exit"}
)

_UNSUPPORTED_TYPES = {
    "char", "short", "long", "float", "double", "unsigned", "signed", "_Bool",
    "struct", "union", "enum", "typedef", "const", "volatile",
}
_UNSUPPORTED_STMTS = {"do", "switch", "goto", "case", "default"}
_STORAGE = {"static", "extern", "inline"}


def _pos() -> int:
    return field(default=0, compare=False)


# -- statements -------------------------------------------------------------


@dataclass(frozen=True)
class Decl:
    items: tuple[tuple[str, Expr | None], ...]
    line: int = _pos()
    column: int = _pos()


@dataclass(frozen=True)
class Assign:
    target: str
    op: str  # "=" or a compound operator such as "+="
    value: Expr
    line: int = _pos()
    column: int = _pos()


@dataclass(frozen=True)
class ExprStmt:
    expr: Expr
    line: int = _pos()
    column: int = _pos()


@dataclass(frozen=True)
class If:
    cond: Expr
    then: "Stmt"
    other: "Stmt | None" = None
    line: int = _pos()
    column: int = _pos()


@dataclass(frozen=True)
class While:
    """``while`` loop; a ``for`` loop is the same node with ``init``/``step`` set.

    ``cond`` is ``None`` for ``for (;;)``.  ``step`` runs after the body and
    on ``continue``.
    """

    cond: Expr | None
    body: "Stmt"
    init: "Stmt | None" = None
    step: "Stmt | None" = None
    is_for: bool = False
    line: int = _pos()
    column: int = _pos()


@dataclass(frozen=True)
class Return:
    value: Expr | None = None
    line: int = _pos()
    column: int = _pos()


@dataclass(frozen=True)
class Break:
    line: int = _pos()
    column: int = _pos()


@dataclass(frozen=True)
class Continue:
    line: int = _pos()
    column: int = _pos()


@dataclass(frozen=True)
class Block:
    stmts: tuple["Stmt", ...] = ()
    line: int = _pos()
    column: int = _pos()


@dataclass(frozen=True)
class Assert:
    cond: Expr
    # (entry index, clause) for asserts inserted by instrumentation
    origin: tuple[int, str] | None = field(default=None, compare=False)
    line: int = _pos()
    column: int = _pos()


Stmt = Union[Decl, Assign, ExprStmt, If, While, Return, Break, Continue, Block, Assert]


@dataclass(frozen=True)
class FuncDef:
    name: str
    return_type: str  # "int" | "void"
    params: tuple[str, ...]
    body: Block
    line: int = _pos()
    column: int = _pos()

    @property
    def returns_void(self) -> bool:
        return self.return_type == "void"


@dataclass(frozen=True)
class FuncDecl:
    name: str
    return_type: str
    params: tuple[str, ...]
    line: int = _pos()
    column: int = _pos()


@dataclass(frozen=True)
class GlobalDecl:
    decl: Decl
    line: int = _pos()
    column: int = _pos()


TopItem = Union[FuncDef, FuncDecl, GlobalDecl]


@dataclass(frozen=True)
class ProgramAst:
    items: tuple[TopItem, ...] = ()
    file_name: str | None = field(default=None, compare=False)

    @property
    def functions(self) -> dict[str, FuncDef]:
        return {it.name: it for it in self.items if isinstance(it, FuncDef)}

    @property
    def globals(self) -> list[tuple[str, Expr | None]]:
        out: list[tuple[str, Expr | None]] = []
        for it in self.items:
            if isinstance(it, GlobalDecl):
                out.extend(it.decl.items)
        return out

    @property
    def global_names(self) -> set[str]:
        return {name for name, _ in self.globals}


# -- parser -----------------------------------------------------------------


class _ParseError(Exception):
    def __init__(self, message: str, tok: Token):
        super().__init__(message)
        self.message = message
        self.tok = tok


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def peek(self, k: int = 1) -> Token:
        return self.tokens[min(self.pos + k, len(self.tokens) - 1)]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def at(self, text: str) -> bool:
        return self.tok.kind in ("op", "ident") and self.tok.text == text

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.advance()
            return True
        return False

    def expect(self, text: str) -> Token:
        if not self.at(text):
            found = self.tok.text or "end of input"
            raise _ParseError(f"expected {text!r}, found {found!r}", self.tok)
        return self.advance()

    def ident(self) -> Token:
        if self.tok.kind != "ident":
            raise _ParseError(f"expected identifier, found {self.tok.text or 'end of input'!r}", self.tok)
        return self.advance()

    def expression(self) -> Expr:
        parser = ExprParser(self.tokens, self.pos, allow_calls=True)
        try:
            expr = parser.conditional()
        except ExprError as exc:
            tok = next((t for t in self.tokens if t.offset >= exc.offset), self.tokens[-1])
            raise _ParseError(exc.message, tok) from None
        self.pos = parser.pos
        return expr

    # -- types and declarators

    def check_type(self, tok: Token) -> None:
        if tok.kind == "ident" and tok.text in _UNSUPPORTED_TYPES:
            raise _ParseError(f"unsupported construct: type {tok.text!r}", tok)

    def base_type(self) -> str:
        tok = self.tok
        self.check_type(tok)
        if tok.kind == "ident" and tok.text in ("int", "void"):
            self.advance()
            return tok.text
        raise _ParseError(f"expected type, found {tok.text or 'end of input'!r}", tok)

    def declarator_name(self) -> Token:
        if self.at("*"):
            raise _ParseError("unsupported construct: pointer declarator", self.tok)
        name = self.ident()
        if self.at("["):
            raise _ParseError("unsupported construct: array declarator", self.tok)
        return name

    def is_type_start(self) -> bool:
        tok = self.tok
        return tok.kind == "ident" and (tok.text in ("int", "void") or tok.text in _UNSUPPORTED_TYPES)

    # -- top level

    def program(self, file_name: str | None) -> ProgramAst:
        items: list[TopItem] = []
        while self.tok.kind != "eof":
            item = self.top_item()
            if item is not None:
                items.append(item)
        return ProgramAst(tuple(items), file_name)

    def skip_builtin(self) -> None:
        depth = 0
        while self.tok.kind != "eof":
            tok = self.advance()
            if tok.text in ("(", "{"):
                depth += 1
            elif tok.text in (")", "}"):
                depth -= 1
                if depth == 0 and tok.text == "}":
                    return
            elif tok.text == ";" and depth == 0:
                return

    def top_item(self) -> TopItem | None:
        start = self.tok
        while self.tok.kind == "ident" and self.tok.text in _STORAGE:
            self.advance()
        if self.tok.kind == "ident" and self.tok.text in BUILTINS:
            # implicit-int builtin declarations are never user code
            self.skip_builtin()
            return None
        rtype = self.base_type()
        if self.tok.kind == "ident" and self.tok.text in BUILTINS:
            self.skip_builtin()
            return None
        name = self.declarator_name()
        if self.at("("):
            params = self.params()
            if self.accept(";"):
                return FuncDecl(name.text, rtype, params, start.line, start.column)
            if not self.at("{"):
                raise _ParseError(f"expected function body, found {self.tok.text!r}", self.tok)
            body = self.block()
            return FuncDef(name.text, rtype, params, body, start.line, start.column)
        if rtype != "int":
            raise _ParseError("variables must have type int", name)
        decl = self.decl_rest(name, start)
        return GlobalDecl(decl, start.line, start.column)

    def params(self) -> tuple[str, ...]:
        self.expect("(")
        names: list[str] = []
        if self.at("void") and self.peek().text == ")":
            self.advance()
        elif not self.at(")"):
            while True:
                ptype = self.base_type()
                if ptype != "int":
                    raise _ParseError("parameters must have type int", self.tok)
                names.append(self.declarator_name().text)
                if not self.accept(","):
                    break
        self.expect(")")
        return tuple(names)

    def decl_rest(self, first: Token, start: Token) -> Decl:
        items: list[tuple[str, Expr | None]] = []
        name = first
        while True:
            init = self.expression() if self.accept("=") else None
            items.append((name.text, init))
            if not self.accept(","):
                break
            name = self.declarator_name()
        self.expect(";")
        return Decl(tuple(items), start.line, start.column)

    # -- statements

    def block(self) -> Block:
        start = self.expect("{")
        stmts: list[Stmt] = []
        while not self.at("}"):
            if self.tok.kind == "eof":
                raise _ParseError("unterminated block", start)
            stmts.append(self.statement())
        self.expect("}")
        return Block(tuple(stmts), start.line, start.column)

    def local_decl(self) -> Decl:
        start = self.tok
        rtype = self.base_type()
        if rtype != "int":
            raise _ParseError("variables must have type int", start)
        return self.decl_rest(self.declarator_name(), start)

    def statement(self) -> Stmt:
        tok = self.tok
        line, col = tok.line, tok.column
        if tok.kind == "op":
            if tok.text == "{":
                return self.block()
            if tok.text == ";":
                self.advance()
                return Block((), line, col)
            if tok.text in ("++", "--"):
                stmt = self.simple()
                self.expect(";")
                return stmt
        if tok.kind == "ident":
            word = tok.text
            if word in _UNSUPPORTED_STMTS:
                raise _ParseError(f"unsupported construct: {word} statement", tok)
            if self.peek().text == ":" and self.peek().kind == "op":
                raise _ParseError("unsupported construct: label", tok)
            if self.is_type_start():
                return self.local_decl()
            if word == "if":
                self.advance()
                self.expect("(")
                cond = self.expression()
                self.expect(")")
                then = self.statement()
                other = self.statement() if self.accept("else") else None
                return If(cond, then, other, line, col)
            if word == "while":
                self.advance()
                self.expect("(")
                cond = self.expression()
                self.expect(")")
                body = self.statement()
                return While(cond, body, None, None, False, line, col)
            if word == "for":
                return self.for_loop()
            if word == "return":
                self.advance()
                value = None if self.at(";") else self.expression()
                self.expect(";")
                return Return(value, line, col)
            if word == "break":
                self.advance()
                self.expect(";")
                return Break(line, col)
            if word == "continue":
                self.advance()
                self.expect(";")
                return Continue(line, col)
            if word == "assert" and self.peek().text == "(":
                self.advance()
                self.expect("(")
                cond = self.expression()
                self.expect(")")
                self.expect(";")
                return Assert(cond, None, line, col)
        stmt = self.simple()
        self.expect(";")
        return stmt

    def simple(self) -> Stmt:
        """Assignment, increment/decrement or expression statement, without ``;``."""
        tok = self.tok
        line, col = tok.line, tok.column
        if tok.kind == "op" and tok.text in ("++", "--"):
            self.advance()
            name = self.ident()
            return Assign(name.text, tok.text[0] + "=", _one(), line, col)
        if tok.kind == "ident":
            nxt = self.peek()
            if nxt.kind == "op" and (nxt.text == "=" or (nxt.text.endswith("=") and nxt.text not in ("==", "!=", "<=", ">="))):
                self.advance()
                op = self.advance().text
                return Assign(tok.text, op, self.expression(), line, col)
            if nxt.kind == "op" and nxt.text in ("++", "--"):
                self.advance()
                self.advance()
                return Assign(tok.text, nxt.text[0] + "=", _one(), line, col)
        if tok.kind == "op" and tok.text == "*":
            raise _ParseError("unsupported construct: pointer dereference", tok)
        return ExprStmt(self.expression(), line, col)

    def for_loop(self) -> While:
        start = self.advance()
        self.expect("(")
        init: Stmt | None = None
        if self.is_type_start():
            init = self.local_decl()
        elif not self.accept(";"):
            init = self.simple()
            self.expect(";")
        cond = None if self.at(";") else self.expression()
        self.expect(";")
        step = None if self.at(")") else self.simple()
        self.expect(")")
        body = self.statement()
        return While(cond, body, init, step, True, start.line, start.column)


def _one() -> Expr:
    from .expr import Lit

    return Lit(1)


def parse_program(source: str, file_name: str | None = None) -> ProgramAst:
    """Parse a translation unit of the C subset.

    Raises:
        DiagnosticError: with one ``syntax`` diagnostic carrying the position
            of the offending token.
    """
    try:
        tokens = list(tokenize(source, skip_directives=True))
        return _Parser(tokens).program(file_name)
    except _ParseError as exc:
        diag = Diagnostic("syntax", Severity.ERROR, exc.message, "", file_name or "", exc.tok.line, exc.tok.column)
        raise DiagnosticError([diag]) from None
    except ExprError as exc:
        line = source.count("\n", 0, exc.offset) + 1
        col = exc.offset - (source.rfind("\n", 0, exc.offset) + 1) + 1
        diag = Diagnostic("syntax", Severity.ERROR, exc.message, "", file_name or "", line, col)
        raise DiagnosticError([diag]) from None


# -- traversal --------------------------------------------------------------


def children(stmt: Stmt) -> Iterator[Stmt]:
    if isinstance(stmt, Block):
        yield from stmt.stmts
    elif isinstance(stmt, If):
        yield stmt.then
        if stmt.other is not None:
            yield stmt.other
    elif isinstance(stmt, While):
        if stmt.init is not None:
            yield stmt.init
        yield stmt.body
        if stmt.step is not None:
            yield stmt.step


def iter_statements(stmt: Stmt) -> Iterator[Stmt]:
    yield stmt
    for child in children(stmt):
        yield from iter_statements(child)


def statement_exprs(stmt: Stmt) -> Iterator[Expr]:
    """Expressions directly held by ``stmt`` (not by nested statements)."""
    if isinstance(stmt, Decl):
        yield from (init for _, init in stmt.items if init is not None)
    elif isinstance(stmt, (Assign,)):
        yield stmt.value
    elif isinstance(stmt, (ExprStmt,)):
        yield stmt.expr
    elif isinstance(stmt, (If, Assert)):
        yield stmt.cond
    elif isinstance(stmt, While):
        if stmt.cond is not None:
            yield stmt.cond
    elif isinstance(stmt, Return):
        if stmt.value is not None:
            yield stmt.value


def identifiers(program: ProgramAst) -> set[str]:
    """Every identifier the program declares or mentions."""
    names: set[str] = set()
    for item in program.items:
        names.add(item.name if not isinstance(item, GlobalDecl) else "")
        if isinstance(item, GlobalDecl):
            names.update(n for n, _ in item.decl.items)
            for _, init in item.decl.items:
                if init is not None:
                    names.update(_expr_names(init))
        elif isinstance(item, (FuncDef, FuncDecl)):
            names.update(item.params)
        if isinstance(item, FuncDef):
            for stmt in iter_statements(item.body):
                if isinstance(stmt, Decl):
                    names.update(n for n, _ in stmt.items)
                if isinstance(stmt, Assign):
                    names.add(stmt.target)
                for e in statement_exprs(stmt):
                    names.update(_expr_names(e))
    names.discard("")
    return names


def _expr_names(e: Expr) -> Iterator[str]:
    for node in walk(e):
        if isinstance(node, Var):
            yield node.name
        elif isinstance(node, Call):
            yield node.name


# -- program points ---------------------------------------------------------


@dataclass(frozen=True)
class FunctionEntry:
    function: str


@dataclass(frozen=True)
class LoopHead:
    function: str
    line: int
    column: int


@dataclass(frozen=True)
class BeforeStatement:
    function: str
    line: int
    column: int


@dataclass(frozen=True)
class ReturnPoint:
    """After the returned expression is evaluated; ``line == 0`` marks the body end."""

    function: str
    line: int = 0
    column: int = 0

    @property
    def is_body_end(self) -> bool:
        return self.line == 0


ProgramPoint = Union[FunctionEntry, LoopHead, BeforeStatement, ReturnPoint]


@dataclass
class _StmtInfo:
    stmt: Stmt
    function: FuncDef
    visible: frozenset[str]
    # block-scoped locals in scope (excluding parameters)
    locals: frozenset[str] = frozenset()


class ProgramIndex:
    """Position lookups and scope information for one parsed program."""

    def __init__(self, program: ProgramAst):
        self.program = program
        self.functions = program.functions
        self.globals = frozenset(program.global_names)
        self.function_starts: dict[tuple[int, int], FuncDef] = {}
        self.statements: dict[tuple[int, int], _StmtInfo] = {}
        self.loops: dict[tuple[int, int], _StmtInfo] = {}
        # names visible when a loop condition is evaluated (includes for-init declarations)
        self.loop_scope: dict[tuple[int, int], frozenset[str]] = {}
        for f in self.functions.values():
            self.function_starts[(f.line, f.column)] = f
            self._scan(f, f.body, frozenset(self.globals | set(f.params)), frozenset())

    def _scan(
        self, f: FuncDef, stmt: Stmt, visible: frozenset[str], local: frozenset[str]
    ) -> tuple[frozenset[str], frozenset[str]]:
        """Record ``stmt`` and return the scope in effect after it."""
        key = (stmt.line, stmt.column)
        info = _StmtInfo(stmt, f, frozenset(visible), local)
        self.statements.setdefault(key, info)
        if isinstance(stmt, Decl):
            names = {name for name, _ in stmt.items}
            return visible | names, local | names
        if isinstance(stmt, Block):
            inner = (visible, local)
            for s in stmt.stmts:
                inner = self._scan(f, s, *inner)
        elif isinstance(stmt, If):
            self._scan(f, stmt.then, visible, local)
            if stmt.other is not None:
                self._scan(f, stmt.other, visible, local)
        elif isinstance(stmt, While):
            self.loops.setdefault(key, info)
            inner = (visible, local)
            if stmt.init is not None:
                inner = self._scan(f, stmt.init, visible, local)
            self.loop_scope[key] = frozenset(inner[0])
            self._scan(f, stmt.body, *inner)
            if stmt.step is not None:
                self._scan(f, stmt.step, *inner)
        return visible, local

    def function_of(self, point: ProgramPoint) -> FuncDef:
        if isinstance(point, (FunctionEntry, ReturnPoint)):
            return self.functions[point.function]
        return self.functions[point.function]

    def visible_at(self, point: ProgramPoint) -> frozenset[str]:
        if isinstance(point, LoopHead):
            return self.loop_scope[(point.line, point.column)]
        if isinstance(point, BeforeStatement):
            return self.statements[(point.line, point.column)].visible
        f = self.functions[point.function]
        return self.globals | set(f.params)


def _same_file(a: str, b: str) -> bool:
    return a == b or os.path.basename(a) == os.path.basename(b)


def resolve_location(
    loc: Location,
    program: ProgramAst | ProgramIndex,
    kind: EntryKind | str,
    *,
    column_base: int = 1,
) -> ProgramPoint:
    """Map a witness location to the program point it denotes.

    Contracts must point at the first character of a function definition,
    loop invariants at a loop keyword and location invariants at the first
    character of a statement.  Without a column the first matching construct
    on the line is taken.

    Raises:
        DiagnosticError: rule ``R1`` with the reason resolution failed.
    """
    index = program if isinstance(program, ProgramIndex) else ProgramIndex(program)
    kind = EntryKind(kind)
    file_name = index.program.file_name

    def fail(message: str) -> DiagnosticError:
        return DiagnosticError(
            [Diagnostic("R1", Severity.ERROR, message, "", loc.file_name, loc.line, loc.column or 0)]
        )

    if file_name is not None and not _same_file(loc.file_name, file_name):
        raise fail(f"file_name {loc.file_name!r} does not match the program {file_name!r}")

    if kind is EntryKind.FUNCTION_CONTRACT:
        table = index.function_starts
        what = "function definition"
    elif kind is EntryKind.LOOP_INVARIANT:
        table = index.loops
        what = "loop"
    else:
        table = index.statements
        what = "statement"

    if loc.column is None:
        candidates = sorted(k for k in table if k[0] == loc.line)
        if not candidates:
            raise fail(f"no {what} starts on line {loc.line}")
        key = candidates[0]
    else:
        key = (loc.line, loc.column - column_base + 1)
        if key not in table:
            raise fail(f"no {what} starts at line {loc.line}, column {loc.column}")

    if kind is EntryKind.FUNCTION_CONTRACT:
        f = index.function_starts[key]
        point: ProgramPoint = FunctionEntry(f.name)
    else:
        f = table[key].function
        if kind is EntryKind.LOOP_INVARIANT:
            point = LoopHead(f.name, *key)
        else:
            point = BeforeStatement(f.name, *key)
    if loc.function is not None and loc.function != f.name:
        raise fail(f"location names function {loc.function!r} but the construct is in {f.name!r}")
    return point


# -- return points ----------------------------------------------------------


def _always_true(e: Expr | None) -> bool:
    from .expr import Lit

    return e is None or (isinstance(e, Lit) and e.value != 0)


def _has_break(stmt: Stmt) -> bool:
    if isinstance(stmt, Break):
        return True
    if isinstance(stmt, While):
        return False
    return any(_has_break(c) for c in children(stmt))


def can_complete(stmt: Stmt) -> bool:
    """Whether control may flow past ``stmt`` normally."""
    if isinstance(stmt, (Return, Break, Continue)):
        return False
    if isinstance(stmt, ExprStmt) and isinstance(stmt.expr, Call):
        return stmt.expr.name not in ("abort", "reach_error", "exit", "__VERIFIER_error")
    if isinstance(stmt, Block):
        return all(can_complete(s) for s in stmt.stmts)
    if isinstance(stmt, If):
        return stmt.other is None or can_complete(stmt.then) or can_complete(stmt.other)
    if isinstance(stmt, While):
        return not _always_true(stmt.cond) or _has_break(stmt.body)
    return True


def enumerate_return_points(f: FuncDef) -> list[ReturnPoint]:
    """Every ``return`` of ``f`` in source order, plus the body end if control can fall off it."""
    points = [
        ReturnPoint(f.name, s.line, s.column) for s in iter_statements(f.body) if isinstance(s, Return)
    ]
    if can_complete(f.body) or not points:
        points.append(ReturnPoint(f.name))
    return points
