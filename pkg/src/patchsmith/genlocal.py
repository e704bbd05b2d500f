"""Single-location patch templates.

Every generator is a pure function of (program, location, context); output
order is fixed by the template order below, then by traversal order inside the
statement, so two runs produce identical candidate lists.  Candidates apply
cleanly by construction: substitutions stay inside the static scope, deletion
and wrapping skip `let` bindings that later code may need.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass

from .edits import Delete, Edit, EditTarget, Patch, ReplaceExpr, WrapIf, edit_key
from .exceptions import TargetNotFound
from .faultloc import RepairLocation
from .interp import ExecutionTrace, StmtEnter, state_at
from .minilang.ast import (
    ARITH_OPS,
    Binary,
    Block,
    Expr,
    ForRange,
    FunctionDecl,
    If,
    IntLit,
    Let,
    Call,
    Program,
    RELATIONAL_OPS,
    Return,
    Stmt,
    Unary,
    Var,
    child_blocks,
    iter_exprs,
    get_expr,
)
from .minilang.printer import format_expr, stmt_header
from .snapshot import DebugSnapshot
from .values import variant

MAX_PATCHES_PER_LOCATION = 200
STRATEGY_LOCAL = "local-template"


@dataclass
class RepairContext:
    """Everything generators may consult: the failing run and its snapshot."""

    snapshot: DebugSnapshot
    trace: ExecutionTrace
    program: Program

    @staticmethod
    def of(snapshot: DebugSnapshot, trace: ExecutionTrace,
           program: Program | None = None) -> "RepairContext":
        return RepairContext(snapshot, trace, program or snapshot.program())


# --- location helpers ---------------------------------------------------------

def static_occurrence(location) -> int:
    """EditTargets carry a static same-line index; repair locations do not."""
    return location.occurrence if isinstance(location, EditTarget) else 0


def resolve_location(program: Program, location: RepairLocation | EditTarget) -> tuple[FunctionDecl, Block, int]:
    """(function, enclosing block, index) of the targeted statement.

    An EditTarget's occurrence disambiguates several statements sharing one
    source line; a RepairLocation's occurrence is the *dynamic* ordinal that
    informed its score, so it does not take part in resolution.
    """
    fn = program.function(location.function)
    matches: list[tuple[Block, int]] = []

    def visit(block: Block) -> None:
        for i, stmt in enumerate(block):
            if stmt.line == location.line:
                matches.append((block, i))
            for sub in child_blocks(stmt):
                visit(sub)

    visit(fn.body)
    occurrence = static_occurrence(location)
    if occurrence >= len(matches):
        raise TargetNotFound(
            f"no statement at {location.function}:{location.line} occurrence {occurrence}"
        )
    block, index = matches[occurrence]
    return fn, block, index


def static_scope(fn: FunctionDecl, target: Stmt) -> list[str]:
    """Names visible at the target statement, in declaration order."""
    found: list[str] = []

    def visit(block: Block, scope: list[str]) -> bool:
        nonlocal found
        local = list(scope)
        for stmt in block:
            if stmt is target:
                found = local
                return True
            if isinstance(stmt, ForRange):
                if any(visit(sub, local + [stmt.var]) for sub in child_blocks(stmt)):
                    return True
            else:
                if any(visit(sub, local) for sub in child_blocks(stmt)):
                    return True
            if isinstance(stmt, Let):
                local.append(stmt.name)
        return False

    visit(fn.body, list(fn.params))
    return found


def runtime_variants(context: RepairContext, location) -> dict[str, str]:
    """name -> value variant at the latest trace occurrence of the location."""
    latest: StmtEnter | None = None
    for event in context.trace.events:
        if (isinstance(event, StmtEnter) and event.function == location.function
                and event.line == location.line):
            latest = event
    if latest is None:
        return {}
    frames = state_at(context.trace, latest.idx)
    env = frames.get(latest.frame_id, {})
    return {name: variant(value) for name, value in env.items()}


# --- template generators ----------------------------------------------------------

def _relational_flips(stmt: Stmt) -> list[tuple[Edit, str]]:
    out = []
    for path, expr in iter_exprs(stmt):
        if isinstance(expr, Binary) and expr.op in RELATIONAL_OPS:
            for alt in RELATIONAL_OPS:
                if alt != expr.op:
                    new = Binary(alt, copy.deepcopy(expr.left), copy.deepcopy(expr.right))
                    out.append((ReplaceExpr(path, new), f"flip '{expr.op}' to '{alt}'"))
    return out


def _arith_swaps(stmt: Stmt) -> list[tuple[Edit, str]]:
    out = []
    for path, expr in iter_exprs(stmt):
        if isinstance(expr, Binary) and expr.op in ARITH_OPS:
            for alt in ARITH_OPS:
                if alt != expr.op:
                    new = Binary(alt, copy.deepcopy(expr.left), copy.deepcopy(expr.right))
                    out.append((ReplaceExpr(path, new), f"swap '{expr.op}' for '{alt}'"))
    return out


def _adjusted_literal(stmt: Stmt, path, lit: IntLit, delta: int) -> tuple:
    """Literal +-1 with `E + 0`/`E - 0` collapsed to E."""
    k = lit.value + delta
    if k == 0 and len(path) >= 2 and path[-1] == "right":
        parent = get_expr(stmt, path[:-1])
        if isinstance(parent, Binary) and parent.op in ("+", "-"):
            return (path[:-1], copy.deepcopy(parent.left))
    return (path, IntLit(k))


def _literal_tweaks(stmt: Stmt) -> list[tuple[Edit, str]]:
    out = []
    for path, expr in iter_exprs(stmt):
        if isinstance(expr, IntLit):
            for delta in (1, -1):
                new_path, new_expr = _adjusted_literal(stmt, path, expr, delta)
                out.append((ReplaceExpr(new_path, new_expr),
                            f"literal {expr.value} {'+' if delta > 0 else '-'} 1"))
    return out


def _negations(stmt: Stmt) -> list[tuple[Edit, str]]:
    if not hasattr(stmt, "cond"):
        return []
    cond = stmt.cond
    if isinstance(cond, Unary) and cond.op == "!":
        return [(ReplaceExpr(("cond",), copy.deepcopy(cond.operand)), "drop negation")]
    return [(ReplaceExpr(("cond",), Unary("!", copy.deepcopy(cond))), "negate condition")]


def _range_bounds(stmt: Stmt) -> list[tuple[Edit, str]]:
    if not isinstance(stmt, ForRange):
        return []
    out = []
    for name in ("lo", "hi"):
        bound = getattr(stmt, name)
        for delta in (1, -1):
            sign = "+" if delta > 0 else "-"
            if isinstance(bound, IntLit):
                out.append((ReplaceExpr((name,), IntLit(bound.value + delta)),
                            f"{name} bound {sign} 1"))
            elif (isinstance(bound, Binary) and bound.op in ("+", "-")
                  and isinstance(bound.right, IntLit)):
                offset = bound.right.value + (delta if bound.op == "+" else -delta)
                if offset == 0:
                    new: Expr = copy.deepcopy(bound.left)
                elif offset < 0 and bound.op == "+":
                    new = Binary("-", copy.deepcopy(bound.left), IntLit(-offset))
                elif offset < 0 and bound.op == "-":
                    new = Binary("+", copy.deepcopy(bound.left), IntLit(-offset))
                else:
                    new = Binary(bound.op, copy.deepcopy(bound.left), IntLit(offset))
                out.append((ReplaceExpr((name,), new), f"{name} bound {sign} 1"))
            else:
                new = Binary(sign, copy.deepcopy(bound), IntLit(1))
                out.append((ReplaceExpr((name,), new), f"{name} bound {sign} 1"))
    return out


def _var_substitutions(stmt: Stmt, scope: list[str], variants: dict[str, str]) -> list[tuple[Edit, str]]:
    out = []
    for path, expr in iter_exprs(stmt):
        if not isinstance(expr, Var):
            continue
        own = variants.get(expr.name)
        if own is None:
            continue
        for other in sorted(scope):
            if other != expr.name and variants.get(other) == own:
                out.append((ReplaceExpr(path, Var(other)),
                            f"use '{other}' instead of '{expr.name}'"))
    return out


def _arg_swaps(stmt: Stmt) -> list[tuple[Edit, str]]:
    out = []
    for path, expr in iter_exprs(stmt):
        if isinstance(expr, Call) and len(expr.args) >= 2:
            for i in range(len(expr.args)):
                for j in range(i + 1, len(expr.args)):
                    new = copy.deepcopy(expr)
                    new.args[i], new.args[j] = new.args[j], new.args[i]
                    out.append((ReplaceExpr(path, new),
                                f"swap arguments {i} and {j} of {expr.callee}()"))
    return out


def _deletion(stmt: Stmt) -> list[tuple[Edit, str]]:
    if isinstance(stmt, Let):
        return []  # removing a binding orphans later reads
    return [(Delete(), "delete statement")]


def _wrappable_span(fn: FunctionDecl, block: Block, index: int, span: int) -> bool:
    """A span may be wrapped only if its `let` bindings stay inside it."""
    from .minilang.ast import stmt_reads, stmt_writes, walk_block

    if index + span > len(block):
        return False
    wrapped = block[index: index + span]
    inner_ids = {id(s) for w in wrapped for s in walk_block([w])}
    bound = {s.name for w in wrapped for s in walk_block([w]) if isinstance(s, Let)}
    if not bound:
        return True
    for stmt in walk_block(fn.body):
        if id(stmt) in inner_ids:
            continue
        if bound & set(stmt_reads(stmt)) or bound & set(stmt_writes(stmt)):
            return False
    return True


def _guards(fn: FunctionDecl, stmt: Stmt, block: Block, index: int, scope: list[str],
            variants: dict[str, str]) -> list[tuple[Edit, str]]:
    int_vars = sorted(n for n in scope if variants.get(n) == "Int")[:6]
    array_vars = sorted(n for n in scope if variants.get(n) == "Array")[:6]
    guards: list[tuple[Expr, str]] = []
    for v in int_vars:
        guards.append((Binary("!=", Var(v), IntLit(0)), f"guard {v} != 0"))
    for v in int_vars:
        guards.append((Binary(">=", Var(v), IntLit(0)), f"guard {v} >= 0"))
    for i in int_vars:
        for a in array_vars:
            guards.append((Binary("<", Var(i), _len_of(a)), f"guard {i} < len({a})"))
    for a in array_vars:
        guards.append((Binary(">", _len_of(a), IntLit(0)), f"guard len({a}) > 0"))

    spans = [s for s in (1, 2, 3) if _wrappable_span(fn, block, index, s)]
    out = []
    for guard, label in guards:
        for span in spans:
            out.append((WrapIf(copy.deepcopy(guard), span), f"{label} over {span} stmt(s)"))
    return out


def _len_of(name: str) -> Expr:
    from .minilang.ast import Len

    return Len(Var(name))


def _return_replacements(stmt: Stmt, scope: list[str]) -> list[tuple[Edit, str]]:
    if not isinstance(stmt, Return) or stmt.value is None:
        return []
    out = []
    for name in sorted(scope):
        if not (isinstance(stmt.value, Var) and stmt.value.name == name):
            out.append((ReplaceExpr(("value",), Var(name)), f"return '{name}'"))
    return out


# --- the generator ------------------------------------------------------------------

def generate_local(program: Program, location, context: RepairContext,
                   cap: int = MAX_PATCHES_PER_LOCATION) -> list[Patch]:
    """All template candidates for one repair location, deduplicated, capped."""
    fn, block, index = resolve_location(program, location)
    stmt = block[index]
    scope = static_scope(fn, stmt)
    variants = runtime_variants(context, location)
    target = EditTarget(location.function, location.line, static_occurrence(location))

    staged: list[tuple[Edit, str]] = []
    staged += _relational_flips(stmt)
    staged += _arith_swaps(stmt)
    staged += _literal_tweaks(stmt)
    staged += _negations(stmt)
    staged += _range_bounds(stmt)
    staged += _var_substitutions(stmt, scope, variants)
    staged += _arg_swaps(stmt)
    staged += _deletion(stmt)
    staged += _guards(fn, stmt, block, index, scope, variants)
    staged += _return_replacements(stmt, scope)

    patches: list[Patch] = []
    seen: set[str] = set()
    original_header = stmt_header(stmt)
    for action, label in staged:
        edit = Edit(target, action)
        key = edit_key(edit)
        if key in seen:
            continue
        # drop identity rewrites (replacing an expression with itself)
        if isinstance(action, ReplaceExpr):
            try:
                if format_expr(get_expr(stmt, action.path)) == format_expr(action.new_expr):
                    continue
            except KeyError:
                continue
        seen.add(key)
        patches.append(Patch(
            [edit], STRATEGY_LOCAL,
            provenance=f"{label} at {location.function}:{location.line} ({original_header})",
        ))
        if len(patches) >= cap:
            break
    return patches
