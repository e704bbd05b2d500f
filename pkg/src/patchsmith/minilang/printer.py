"""Canonical MiniLang formatter.

One statement per line, 4-space indent, `} else {` on a shared line, one blank
line between functions.  parse(pretty_print(p)) is structurally identical to p,
which makes printed text the substrate for diffs and for patch application.
"""

from __future__ import annotations

from .ast import (
    ArrayLit,
    Assert,
    Assign,
    Binary,
    Block,
    BoolLit,
    Call,
    Expr,
    ExprStmt,
    ForRange,
    FunctionDecl,
    If,
    Index,
    IndexAssign,
    IntLit,
    Len,
    Let,
    Print,
    Program,
    Return,
    Stmt,
    StrLit,
    Throw,
    Unary,
    Var,
    While,
)

_INDENT = "    "

# precedence levels; higher binds tighter
_LEVEL = {
    "||": 1, "&&": 2,
    "==": 3, "!=": 3, "<": 3, "<=": 3, ">": 3, ">=": 3,
    "+": 4, "-": 4,
    "*": 5, "/": 5, "%": 5,
}
_UNARY_LEVEL = 6
_POSTFIX_LEVEL = 7
_ATOM_LEVEL = 8

_STR_ESCAPES = {"\\": "\\\\", '"': '\\"', "\n": "\\n", "\t": "\\t"}


def _escape(text: str) -> str:
    return "".join(_STR_ESCAPES.get(c, c) for c in text)


def expr_level(expr: Expr) -> int:
    if isinstance(expr, Binary):
        return _LEVEL[expr.op]
    if isinstance(expr, Unary):
        return _UNARY_LEVEL
    if isinstance(expr, (Index, Call, Len)):
        return _POSTFIX_LEVEL
    return _ATOM_LEVEL


def format_expr(expr: Expr) -> str:
    if isinstance(expr, IntLit):
        return str(expr.value)
    if isinstance(expr, BoolLit):
        return "true" if expr.value else "false"
    if isinstance(expr, StrLit):
        return f'"{_escape(expr.value)}"'
    if isinstance(expr, ArrayLit):
        return "[" + ", ".join(format_expr(e) for e in expr.items) + "]"
    if isinstance(expr, Var):
        return expr.name
    if isinstance(expr, Unary):
        inner = format_expr(expr.operand)
        if expr_level(expr.operand) < _UNARY_LEVEL:
            inner = f"({inner})"
        return expr.op + inner
    if isinstance(expr, Binary):
        level = _LEVEL[expr.op]
        left = format_expr(expr.left)
        if expr_level(expr.left) < level:
            left = f"({left})"
        right = format_expr(expr.right)
        if expr_level(expr.right) <= level:
            right = f"({right})"
        return f"{left} {expr.op} {right}"
    if isinstance(expr, Call):
        return expr.callee + "(" + ", ".join(format_expr(a) for a in expr.args) + ")"
    if isinstance(expr, Index):
        base = format_expr(expr.base)
        if expr_level(expr.base) < _POSTFIX_LEVEL:
            base = f"({base})"
        return f"{base}[{format_expr(expr.index)}]"
    if isinstance(expr, Len):
        return f"len({format_expr(expr.arg)})"
    raise TypeError(f"unknown expression node {type(expr).__name__}")


def stmt_header(stmt: Stmt) -> str:
    """The statement's own single-line text (block bodies not included)."""
    if isinstance(stmt, Let):
        return f"let {stmt.name} = {format_expr(stmt.value)};"
    if isinstance(stmt, Assign):
        return f"{stmt.name} = {format_expr(stmt.value)};"
    if isinstance(stmt, IndexAssign):
        subscripts = "".join(f"[{format_expr(i)}]" for i in stmt.indices)
        return f"{stmt.base}{subscripts} = {format_expr(stmt.value)};"
    if isinstance(stmt, If):
        return f"if ({format_expr(stmt.cond)}) {{"
    if isinstance(stmt, While):
        return f"while ({format_expr(stmt.cond)}) {{"
    if isinstance(stmt, ForRange):
        return f"for {stmt.var} in {format_expr(stmt.lo)}..{format_expr(stmt.hi)} {{"
    if isinstance(stmt, Return):
        return "return;" if stmt.value is None else f"return {format_expr(stmt.value)};"
    if isinstance(stmt, Throw):
        return f"throw {format_expr(stmt.message)};"
    if isinstance(stmt, Assert):
        return f"assert({format_expr(stmt.cond)});"
    if isinstance(stmt, Print):
        return f"print({format_expr(stmt.value)});"
    if isinstance(stmt, ExprStmt):
        return f"{format_expr(stmt.expr)};"
    raise TypeError(f"unknown statement node {type(stmt).__name__}")


def _emit_block(block: Block, depth: int, lines: list[str]) -> None:
    pad = _INDENT * depth
    for stmt in block:
        lines.append(pad + stmt_header(stmt))
        if isinstance(stmt, If):
            _emit_block(stmt.then_body, depth + 1, lines)
            if stmt.else_body:
                lines.append(pad + "} else {")
                _emit_block(stmt.else_body, depth + 1, lines)
            lines.append(pad + "}")
        elif isinstance(stmt, While):
            _emit_block(stmt.body, depth + 1, lines)
            lines.append(pad + "}")
        elif isinstance(stmt, ForRange):
            _emit_block(stmt.body, depth + 1, lines)
            lines.append(pad + "}")


def format_function(fn: FunctionDecl) -> str:
    lines = [f"fn {fn.name}({', '.join(fn.params)}) {{"]
    _emit_block(fn.body, 1, lines)
    lines.append("}")
    return "\n".join(lines) + "\n"


def pretty_print(program: Program) -> str:
    return "\n".join(format_function(fn) for fn in program.functions)


def format_stmt(stmt: Stmt) -> str:
    """Full multi-line text of one statement at zero indent."""
    lines: list[str] = []
    _emit_block([stmt], 0, lines)
    return "\n".join(lines)
