"""MiniLang: the small deterministic imperative language the engine repairs."""

from .ast import Program, locate, renumber, walk_block, walk_program
from .parser import parse, parse_expression, parse_statements
from .printer import format_expr, format_stmt, pretty_print, stmt_header

__all__ = [
    "Program",
    "locate",
    "renumber",
    "walk_block",
    "walk_program",
    "parse",
    "parse_expression",
    "parse_statements",
    "format_expr",
    "format_stmt",
    "pretty_print",
    "stmt_header",
]
