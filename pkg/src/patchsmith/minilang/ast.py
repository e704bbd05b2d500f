"""MiniLang abstract syntax.

Node equality (``==``) is structural: ``stmt_id`` and ``line`` are carried for
tracing and diffs but excluded from comparison, so two parses of the same text
compare equal no matter how the statements were renumbered.

stmt_ids are dense pre-order integers over the whole program, assigned by
:func:`renumber` (the parser calls it; patch application re-parses, which
renumbers again).
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Iterator, Union

from ..exceptions import UnknownFunction

INT_MIN = -(2**63)
INT_MAX = 2**63 - 1

BINARY_OPS = ("+", "-", "*", "/", "%", "<", "<=", ">", ">=", "==", "!=", "&&", "||")
ARITH_OPS = ("+", "-", "*", "/", "%")
RELATIONAL_OPS = ("<", "<=", ">", ">=", "==", "!=")
LOGICAL_OPS = ("&&", "||")


# --- expressions -------------------------------------------------------------

@dataclass
class Expr:
    pass


@dataclass
class IntLit(Expr):
    value: int


@dataclass
class BoolLit(Expr):
    value: bool


@dataclass
class StrLit(Expr):
    value: str


@dataclass
class ArrayLit(Expr):
    items: list[Expr]


@dataclass
class Var(Expr):
    name: str


@dataclass
class Unary(Expr):
    op: str  # "-" or "!"
    operand: Expr


@dataclass
class Binary(Expr):
    op: str
    left: Expr
    right: Expr


@dataclass
class Call(Expr):
    callee: str
    args: list[Expr]


@dataclass
class Index(Expr):
    base: Expr
    index: Expr


@dataclass
class Len(Expr):
    arg: Expr


# --- statements ---------------------------------------------------------------

@dataclass
class Stmt:
    stmt_id: int = field(default=-1, compare=False, kw_only=True)
    line: int = field(default=0, compare=False, kw_only=True)


Block = list[Stmt]


@dataclass
class Let(Stmt):
    name: str
    value: Expr


@dataclass
class Assign(Stmt):
    name: str
    value: Expr


@dataclass
class IndexAssign(Stmt):
    base: str
    indices: list[Expr]  # a[i][j] = v updates along the whole path
    value: Expr


@dataclass
class If(Stmt):
    cond: Expr
    then_body: Block
    else_body: Block  # empty when no else


@dataclass
class While(Stmt):
    cond: Expr
    body: Block


@dataclass
class ForRange(Stmt):
    var: str
    lo: Expr
    hi: Expr  # exclusive upper bound
    body: Block


@dataclass
class Return(Stmt):
    value: Expr | None


@dataclass
class Throw(Stmt):
    message: Expr


@dataclass
class Assert(Stmt):
    cond: Expr


@dataclass
class Print(Stmt):
    value: Expr


@dataclass
class ExprStmt(Stmt):
    expr: Expr


@dataclass
class FunctionDecl:
    name: str
    params: list[str]
    body: Block


@dataclass
class Program:
    functions: list[FunctionDecl]
    source_hash: str = field(default="", compare=False)

    def function(self, name: str) -> FunctionDecl:
        for fn in self.functions:
            if fn.name == name:
                return fn
        raise UnknownFunction(f"no function named '{name}'")

    def has_function(self, name: str) -> bool:
        return any(fn.name == name for fn in self.functions)


def source_digest(source: str) -> str:
    return hashlib.sha256(source.encode("utf-8")).hexdigest()


# --- traversal ------------------------------------------------------------------

def child_blocks(stmt: Stmt) -> list[Block]:
    if isinstance(stmt, If):
        return [stmt.then_body, stmt.else_body]
    if isinstance(stmt, While):
        return [stmt.body]
    if isinstance(stmt, ForRange):
        return [stmt.body]
    return []


def walk_block(block: Block) -> Iterator[Stmt]:
    """Pre-order traversal of a block and all nested blocks."""
    for stmt in block:
        yield stmt
        for sub in child_blocks(stmt):
            yield from walk_block(sub)


def walk_program(program: Program) -> Iterator[tuple[FunctionDecl, Stmt]]:
    for fn in program.functions:
        for stmt in walk_block(fn.body):
            yield fn, stmt


def renumber(program: Program) -> None:
    """Assign dense pre-order stmt_ids {0..N-1} across the whole program."""
    next_id = 0
    for _, stmt in walk_program(program):
        stmt.stmt_id = next_id
        next_id += 1


def statement_count(program: Program) -> int:
    return sum(1 for _ in walk_program(program))


def find_statement(program: Program, stmt_id: int) -> tuple[FunctionDecl, Stmt] | None:
    for fn, stmt in walk_program(program):
        if stmt.stmt_id == stmt_id:
            return fn, stmt
    return None


def locate(program: Program, function: str, line: int) -> list[int]:
    """stmt_ids of all statements of `function` on source line `line`, pre-order."""
    fn = program.function(function)
    return [s.stmt_id for s in walk_block(fn.body) if s.line == line]


# --- expression paths -------------------------------------------------------------
#
# A path addresses one expression inside a statement: a tuple whose first step
# is a statement field name and whose later steps descend through expression
# fields ("left", "operand", ...) or list indices ("args", 2).

PathStep = Union[str, int]
ExprPath = tuple[PathStep, ...]

_STMT_EXPR_FIELDS: dict[type, tuple[str, ...]] = {
    Let: ("value",),
    Assign: ("value",),
    IndexAssign: ("indices", "value"),
    If: ("cond",),
    While: ("cond",),
    ForRange: ("lo", "hi"),
    Return: ("value",),
    Throw: ("message",),
    Assert: ("cond",),
    Print: ("value",),
    ExprStmt: ("expr",),
}

_EXPR_CHILD_FIELDS: dict[type, tuple[str, ...]] = {
    ArrayLit: ("items",),
    Unary: ("operand",),
    Binary: ("left", "right"),
    Call: ("args",),
    Index: ("base", "index"),
    Len: ("arg",),
}


def stmt_expr_roots(stmt: Stmt) -> list[tuple[ExprPath, Expr]]:
    """The directly evaluated expressions of a statement (no nested blocks)."""
    roots: list[tuple[ExprPath, Expr]] = []
    for name in _STMT_EXPR_FIELDS.get(type(stmt), ()):
        value = getattr(stmt, name)
        if value is None:
            continue
        if isinstance(value, list):
            for i, item in enumerate(value):
                roots.append(((name, i), item))
        else:
            roots.append(((name,), value))
    return roots


def iter_exprs(stmt: Stmt) -> Iterator[tuple[ExprPath, Expr]]:
    """All expressions of a statement, pre-order, with their paths."""

    def descend(path: ExprPath, expr: Expr) -> Iterator[tuple[ExprPath, Expr]]:
        yield path, expr
        for name in _EXPR_CHILD_FIELDS.get(type(expr), ()):
            child = getattr(expr, name)
            if isinstance(child, list):
                for i, item in enumerate(child):
                    yield from descend(path + (name, i), item)
            else:
                yield from descend(path + (name,), child)

    for root_path, root in stmt_expr_roots(stmt):
        yield from descend(root_path, root)


def get_expr(stmt: Stmt, path: ExprPath) -> Expr:
    node: object = stmt
    for step in path:
        node = node[step] if isinstance(step, int) else getattr(node, step)
    if not isinstance(node, Expr):
        raise KeyError(f"path {path!r} does not address an expression")
    return node


def set_expr(stmt: Stmt, path: ExprPath, new: Expr) -> None:
    """Replace the expression at `path` in place (callers pass a cloned stmt)."""
    if not path:
        raise KeyError("empty expression path")
    node: object = stmt
    for step in path[:-1]:
        node = node[step] if isinstance(step, int) else getattr(node, step)
    last = path[-1]
    if isinstance(last, int):
        node[last] = new
    else:
        setattr(node, last, new)


# --- reads and writes ---------------------------------------------------------------

def expr_reads(expr: Expr) -> list[str]:
    """Variable names read by an expression, in evaluation order, with repeats."""
    out: list[str] = []

    def go(e: Expr) -> None:
        if isinstance(e, Var):
            out.append(e.name)
        else:
            for name in _EXPR_CHILD_FIELDS.get(type(e), ()):
                child = getattr(e, name)
                if isinstance(child, list):
                    for item in child:
                        go(item)
                else:
                    go(child)

    go(expr)
    return out


def stmt_reads(stmt: Stmt) -> list[str]:
    """Statically read variable names of a statement's own expressions.

    Over-approximates short-circuit evaluation; IndexAssign also reads its base.
    """
    names: list[str] = []
    if isinstance(stmt, IndexAssign):
        names.append(stmt.base)
    for _, root in stmt_expr_roots(stmt):
        names.extend(expr_reads(root))
    seen: set[str] = set()
    unique = []
    for n in names:
        if n not in seen:
            seen.add(n)
            unique.append(n)
    return unique


def stmt_writes(stmt: Stmt) -> list[str]:
    if isinstance(stmt, (Let, Assign)):
        return [stmt.name]
    if isinstance(stmt, IndexAssign):
        return [stmt.base]
    if isinstance(stmt, ForRange):
        return [stmt.var]
    return []
