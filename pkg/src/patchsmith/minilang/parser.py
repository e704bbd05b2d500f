"""Recursive-descent parser and static checker for MiniLang.

Parsing is a pure function of the source text: same text, same AST.  All
name/arity problems are caught here, never at runtime, so downstream patch
machinery can assume every Program it holds is resolvable.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..exceptions import ArityError, MiniLangNameError, MiniLangSyntaxError
from . import ast
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

KEYWORDS = {
    "fn", "let", "if", "else", "while", "for", "in", "return",
    "throw", "assert", "print", "true", "false", "len",
}

_PUNCT = (
    "..", "&&", "||", "==", "!=", "<=", ">=",
    "(", ")", "{", "}", "[", "]", ",", ";", "=", "<", ">",
    "+", "-", "*", "/", "%", "!",
)

_ESCAPES = {"n": "\n", "t": "\t", '"': '"', "\\": "\\"}


@dataclass
class Token:
    kind: str  # "ident", "int", "string", "punct", "eof"
    text: str
    line: int
    value: object = None


def tokenize(source: str) -> list[Token]:
    tokens: list[Token] = []
    line = 1
    i = 0
    n = len(source)
    while i < n:
        c = source[i]
        if c == "\n":
            line += 1
            i += 1
            continue
        if c in " \t\r":
            i += 1
            continue
        if c.isdigit():
            j = i
            while j < n and source[j].isdigit():
                j += 1
            text = source[i:j]
            tokens.append(Token("int", text, line, int(text)))
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            tokens.append(Token("ident", source[i:j], line))
            i = j
            continue
        if c == '"':
            j = i + 1
            out: list[str] = []
            while True:
                if j >= n:
                    raise MiniLangSyntaxError(line, "unterminated string literal")
                ch = source[j]
                if ch == '"':
                    j += 1
                    break
                if ch == "\n":
                    raise MiniLangSyntaxError(line, "newline in string literal")
                if ch == "\\":
                    if j + 1 >= n or source[j + 1] not in _ESCAPES:
                        raise MiniLangSyntaxError(line, "bad escape in string literal")
                    out.append(_ESCAPES[source[j + 1]])
                    j += 2
                    continue
                out.append(ch)
                j += 1
            tokens.append(Token("string", source[i:j], line, "".join(out)))
            i = j
            continue
        for p in _PUNCT:
            if source.startswith(p, i):
                tokens.append(Token("punct", p, line))
                i += len(p)
                break
        else:
            raise MiniLangSyntaxError(line, f"unexpected character {c!r}")
    tokens.append(Token("eof", "", line))
    return tokens


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    @property
    def cur(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        tok = self.cur
        self.pos += 1
        return tok

    def at_punct(self, text: str) -> bool:
        return self.cur.kind == "punct" and self.cur.text == text

    def at_keyword(self, word: str) -> bool:
        return self.cur.kind == "ident" and self.cur.text == word

    def accept_punct(self, text: str) -> bool:
        if self.at_punct(text):
            self.advance()
            return True
        return False

    def expect_punct(self, text: str) -> Token:
        if not self.at_punct(text):
            raise MiniLangSyntaxError(self.cur.line, f"expected '{text}', found '{self.cur.text or self.cur.kind}'")
        return self.advance()

    def expect_keyword(self, word: str) -> Token:
        if not self.at_keyword(word):
            raise MiniLangSyntaxError(self.cur.line, f"expected '{word}', found '{self.cur.text or self.cur.kind}'")
        return self.advance()

    def expect_name(self) -> Token:
        if self.cur.kind != "ident" or self.cur.text in KEYWORDS:
            raise MiniLangSyntaxError(self.cur.line, f"expected identifier, found '{self.cur.text or self.cur.kind}'")
        return self.advance()

    # --- grammar ---------------------------------------------------------

    def parse_program(self) -> list[FunctionDecl]:
        functions = []
        while self.cur.kind != "eof":
            functions.append(self.parse_function())
        return functions

    def parse_function(self) -> FunctionDecl:
        self.expect_keyword("fn")
        name_tok = self.expect_name()
        self.expect_punct("(")
        params: list[str] = []
        if not self.at_punct(")"):
            params.append(self.expect_name().text)
            while self.accept_punct(","):
                params.append(self.expect_name().text)
        self.expect_punct(")")
        body = self.parse_block()
        seen: set[str] = set()
        for p in params:
            if p in seen:
                raise MiniLangNameError(name_tok.line, p, f"duplicate parameter '{p}'")
            seen.add(p)
        return FunctionDecl(name_tok.text, params, body)

    def parse_block(self) -> Block:
        self.expect_punct("{")
        body: Block = []
        while not self.at_punct("}"):
            body.append(self.parse_statement())
        self.expect_punct("}")
        return body

    def parse_statement(self) -> Stmt:
        line = self.cur.line
        if self.at_keyword("let"):
            self.advance()
            name = self.expect_name().text
            self.expect_punct("=")
            value = self.parse_expr()
            self.expect_punct(";")
            return Let(name, value, line=line)
        if self.at_keyword("if"):
            self.advance()
            self.expect_punct("(")
            cond = self.parse_expr()
            self.expect_punct(")")
            then_body = self.parse_block()
            else_body: Block = []
            if self.at_keyword("else"):
                self.advance()
                else_body = self.parse_block()
            return If(cond, then_body, else_body, line=line)
        if self.at_keyword("while"):
            self.advance()
            self.expect_punct("(")
            cond = self.parse_expr()
            self.expect_punct(")")
            body = self.parse_block()
            return While(cond, body, line=line)
        if self.at_keyword("for"):
            self.advance()
            var = self.expect_name().text
            self.expect_keyword("in")
            lo = self.parse_expr()
            self.expect_punct("..")
            hi = self.parse_expr()
            body = self.parse_block()
            return ForRange(var, lo, hi, body, line=line)
        if self.at_keyword("return"):
            self.advance()
            value = None if self.at_punct(";") else self.parse_expr()
            self.expect_punct(";")
            return Return(value, line=line)
        if self.at_keyword("throw"):
            self.advance()
            message = self.parse_expr()
            self.expect_punct(";")
            return Throw(message, line=line)
        if self.at_keyword("assert"):
            self.advance()
            self.expect_punct("(")
            cond = self.parse_expr()
            self.expect_punct(")")
            self.expect_punct(";")
            return Assert(cond, line=line)
        if self.at_keyword("print"):
            self.advance()
            self.expect_punct("(")
            value = self.parse_expr()
            self.expect_punct(")")
            self.expect_punct(";")
            return Print(value, line=line)

        expr = self.parse_expr()
        if self.accept_punct("="):
            value = self.parse_expr()
            self.expect_punct(";")
            if isinstance(expr, Var):
                return Assign(expr.name, value, line=line)
            if isinstance(expr, Index):
                indices: list[Expr] = []
                node: Expr = expr
                while isinstance(node, Index):
                    indices.append(node.index)
                    node = node.base
                if isinstance(node, Var):
                    return IndexAssign(node.name, list(reversed(indices)), value, line=line)
            raise MiniLangSyntaxError(line, "cannot assign to this expression")
        self.expect_punct(";")
        return ExprStmt(expr, line=line)

    # precedence climbing
    _LEVELS = [("||",), ("&&",), ("==", "!=", "<", "<=", ">", ">="), ("+", "-"), ("*", "/", "%")]

    def parse_expr(self, level: int = 0) -> Expr:
        if level == len(self._LEVELS):
            return self.parse_unary()
        expr = self.parse_expr(level + 1)
        ops = self._LEVELS[level]
        while self.cur.kind == "punct" and self.cur.text in ops:
            op = self.advance().text
            right = self.parse_expr(level + 1)
            expr = Binary(op, expr, right)
        return expr

    def parse_unary(self) -> Expr:
        if self.at_punct("-"):
            self.advance()
            return Unary("-", self.parse_unary())
        if self.at_punct("!"):
            self.advance()
            return Unary("!", self.parse_unary())
        return self.parse_postfix()

    def parse_postfix(self) -> Expr:
        expr = self.parse_primary()
        while self.accept_punct("["):
            index = self.parse_expr()
            self.expect_punct("]")
            expr = Index(expr, index)
        return expr

    def parse_primary(self) -> Expr:
        tok = self.cur
        if tok.kind == "int":
            self.advance()
            return IntLit(tok.value)
        if tok.kind == "string":
            self.advance()
            return StrLit(tok.value)
        if self.at_keyword("true"):
            self.advance()
            return BoolLit(True)
        if self.at_keyword("false"):
            self.advance()
            return BoolLit(False)
        if self.at_keyword("len"):
            self.advance()
            self.expect_punct("(")
            arg = self.parse_expr()
            self.expect_punct(")")
            return Len(arg)
        if tok.kind == "ident" and tok.text not in KEYWORDS:
            self.advance()
            if self.accept_punct("("):
                args: list[Expr] = []
                if not self.at_punct(")"):
                    args.append(self.parse_expr())
                    while self.accept_punct(","):
                        args.append(self.parse_expr())
                self.expect_punct(")")
                return Call(tok.text, args)
            return Var(tok.text)
        if self.accept_punct("("):
            expr = self.parse_expr()
            self.expect_punct(")")
            return expr
        if self.accept_punct("["):
            items: list[Expr] = []
            if not self.at_punct("]"):
                items.append(self.parse_expr())
                while self.accept_punct(","):
                    items.append(self.parse_expr())
            self.expect_punct("]")
            return ArrayLit(items)
        raise MiniLangSyntaxError(tok.line, f"expected expression, found '{tok.text or tok.kind}'")


# --- static checks ------------------------------------------------------------


class _Checker:
    def __init__(self, program: Program):
        self.program = program
        self.arities = {fn.name: len(fn.params) for fn in program.functions}

    def check(self) -> None:
        seen: set[str] = set()
        for fn in self.program.functions:
            if fn.name in seen:
                first = fn.body[0].line if fn.body else 1
                raise MiniLangNameError(first, fn.name, f"duplicate function '{fn.name}'")
            seen.add(fn.name)
        for fn in self.program.functions:
            self.check_block(fn.body, [set(fn.params)])

    def check_block(self, block: Block, scopes: list[set[str]]) -> None:
        scopes.append(set())
        for stmt in block:
            self.check_stmt(stmt, scopes)
        scopes.pop()

    def in_scope(self, name: str, scopes: list[set[str]]) -> bool:
        return any(name in s for s in scopes)

    def check_stmt(self, stmt: Stmt, scopes: list[set[str]]) -> None:
        for _, root in ast.stmt_expr_roots(stmt):
            self.check_expr(root, stmt.line, scopes)
        if isinstance(stmt, Let):
            if self.in_scope(stmt.name, scopes):
                raise MiniLangNameError(stmt.line, stmt.name, f"'{stmt.name}' is already declared")
            scopes[-1].add(stmt.name)
        elif isinstance(stmt, Assign):
            if not self.in_scope(stmt.name, scopes):
                raise MiniLangNameError(stmt.line, stmt.name)
        elif isinstance(stmt, IndexAssign):
            if not self.in_scope(stmt.base, scopes):
                raise MiniLangNameError(stmt.line, stmt.base)
        elif isinstance(stmt, If):
            self.check_block(stmt.then_body, scopes)
            self.check_block(stmt.else_body, scopes)
        elif isinstance(stmt, While):
            self.check_block(stmt.body, scopes)
        elif isinstance(stmt, ForRange):
            if self.in_scope(stmt.var, scopes):
                raise MiniLangNameError(stmt.line, stmt.var, f"'{stmt.var}' is already declared")
            scopes.append({stmt.var})
            self.check_block(stmt.body, scopes)
            scopes.pop()

    def check_expr(self, expr: Expr, line: int, scopes: list[set[str]]) -> None:
        if isinstance(expr, Var):
            if not self.in_scope(expr.name, scopes):
                raise MiniLangNameError(line, expr.name)
            return
        if isinstance(expr, Call):
            if expr.callee not in self.arities:
                raise MiniLangNameError(line, expr.callee, f"call to undeclared function '{expr.callee}'")
            if len(expr.args) != self.arities[expr.callee]:
                raise ArityError(line, expr.callee, self.arities[expr.callee], len(expr.args))
        for name in ast._EXPR_CHILD_FIELDS.get(type(expr), ()):
            child = getattr(expr, name)
            if isinstance(child, list):
                for item in child:
                    self.check_expr(item, line, scopes)
            else:
                self.check_expr(child, line, scopes)


def parse(source: str) -> Program:
    """Parse and statically check MiniLang source into a Program."""
    parser = _Parser(tokenize(source))
    program = Program(parser.parse_program(), source_hash=ast.source_digest(source))
    _Checker(program).check()
    ast.renumber(program)
    return program


def parse_expression(text: str) -> Expr:
    """Parse a standalone expression (no name resolution)."""
    parser = _Parser(tokenize(text))
    expr = parser.parse_expr()
    if parser.cur.kind != "eof":
        raise MiniLangSyntaxError(parser.cur.line, "trailing input after expression")
    return expr


def parse_statements(text: str) -> list[Stmt]:
    """Parse standalone statements (no name resolution, no renumbering)."""
    parser = _Parser(tokenize(text))
    out: list[Stmt] = []
    while parser.cur.kind != "eof":
        out.append(parser.parse_statement())
    return out
