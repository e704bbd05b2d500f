"""Patch model: targeted AST edits, applied by rebuilding the program text.

Edits address statements by (function, line, occurrence) in the program
version they were generated against; stmt_ids are reassigned on every
application, so cross-version identity never leans on them.  apply_patch
pretty-prints and re-parses the edited tree, which renumbers, re-checks all
static rules, and yields the line map used to carry the problem location into
the patched coordinates.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Union

from .exceptions import ApplyError, ConflictingEdits, TargetNotFound
from .minilang import parse, parse_expression, parse_statements, pretty_print
from .minilang.ast import (
    Block,
    Expr,
    ExprPath,
    If,
    Let,
    Program,
    Stmt,
    child_blocks,
    set_expr,
    walk_block,
    walk_program,
)
from .minilang.printer import format_expr, format_stmt


class Relationship(Enum):
    DU = "DU"
    OA = "OA"
    RIF = "RIF"
    DIF = "DIF"
    EOH = "EOH"
    SU = "SU"
    ONPF = "ONPF"
    FU = "FU"


@dataclass(frozen=True)
class EditTarget:
    function: str
    line: int
    occurrence: int = 0


@dataclass
class ReplaceExpr:
    path: ExprPath
    new_expr: Expr


@dataclass
class ReplaceStmt:
    new_stmt: Stmt


@dataclass
class InsertBefore:
    new_stmt: Stmt


@dataclass
class InsertAfter:
    new_stmt: Stmt


@dataclass
class Delete:
    pass


@dataclass
class WrapIf:
    guard: Expr
    span: int = 1


Action = Union[ReplaceExpr, ReplaceStmt, InsertBefore, InsertAfter, Delete, WrapIf]

_MODIFYING = (ReplaceStmt, Delete, WrapIf)


@dataclass
class Edit:
    target: EditTarget
    action: Action


@dataclass
class Patch:
    edits: list[Edit]
    strategy: str
    relationship: Relationship | None = None
    provenance: str = ""

    def __post_init__(self):
        if len(self.edits) == 1 and self.relationship is not None:
            raise ValueError("single-edit patches carry no relationship")
        if len(self.edits) > 1 and self.relationship is None:
            raise ValueError("multi-edit patches carry exactly one relationship")


def edit_key(edit: Edit) -> str:
    """Canonical text key for dedup and stable ordering."""
    t = edit.target
    action = edit.action
    if isinstance(action, ReplaceExpr):
        detail = f"replace_expr {list(action.path)} {format_expr(action.new_expr)}"
    elif isinstance(action, ReplaceStmt):
        detail = f"replace_stmt {format_stmt(action.new_stmt)}"
    elif isinstance(action, InsertBefore):
        detail = f"insert_before {format_stmt(action.new_stmt)}"
    elif isinstance(action, InsertAfter):
        detail = f"insert_after {format_stmt(action.new_stmt)}"
    elif isinstance(action, Delete):
        detail = "delete"
    else:
        detail = f"wrap_if {format_expr(action.guard)} span={action.span}"
    return f"{t.function}:{t.line}:{t.occurrence} {detail}"


def patch_key(patch: Patch) -> frozenset:
    return frozenset(edit_key(e) for e in patch.edits)


# --- serialization --------------------------------------------------------------

def edit_to_json(edit: Edit) -> dict:
    t = edit.target
    rec: dict = {"function": t.function, "line": t.line, "occurrence": t.occurrence}
    action = edit.action
    if isinstance(action, ReplaceExpr):
        rec.update(action="replace_expr", path=list(action.path), expr=format_expr(action.new_expr))
    elif isinstance(action, ReplaceStmt):
        rec.update(action="replace_stmt", stmt=format_stmt(action.new_stmt))
    elif isinstance(action, InsertBefore):
        rec.update(action="insert_before", stmt=format_stmt(action.new_stmt))
    elif isinstance(action, InsertAfter):
        rec.update(action="insert_after", stmt=format_stmt(action.new_stmt))
    elif isinstance(action, Delete):
        rec.update(action="delete")
    else:
        rec.update(action="wrap_if", guard=format_expr(action.guard), span=action.span)
    return rec


def edit_from_json(rec: dict) -> Edit:
    target = EditTarget(rec["function"], rec["line"], rec.get("occurrence", 0))
    kind = rec["action"]
    if kind == "replace_expr":
        action: Action = ReplaceExpr(tuple(rec["path"]), parse_expression(rec["expr"]))
    elif kind == "replace_stmt":
        action = ReplaceStmt(_single_statement(rec["stmt"]))
    elif kind == "insert_before":
        action = InsertBefore(_single_statement(rec["stmt"]))
    elif kind == "insert_after":
        action = InsertAfter(_single_statement(rec["stmt"]))
    elif kind == "delete":
        action = Delete()
    elif kind == "wrap_if":
        action = WrapIf(parse_expression(rec["guard"]), rec["span"])
    else:
        raise ApplyError(f"unknown edit action {kind!r}")
    return Edit(target, action)


def _single_statement(text: str) -> Stmt:
    stmts = parse_statements(text)
    if len(stmts) != 1:
        raise ApplyError(f"expected exactly one statement, got {len(stmts)}")
    return stmts[0]


def patch_to_json(patch: Patch) -> dict:
    return {
        "edits": [edit_to_json(e) for e in patch.edits],
        "strategy": patch.strategy,
        "relationship": patch.relationship.value if patch.relationship else None,
        "provenance": patch.provenance,
    }


def patch_from_json(rec: dict) -> Patch:
    rel = Relationship(rec["relationship"]) if rec.get("relationship") else None
    return Patch([edit_from_json(e) for e in rec["edits"]], rec["strategy"], rel,
                 rec.get("provenance", ""))


# --- application -----------------------------------------------------------------

@dataclass
class AppliedPatch:
    program: Program
    source: str
    # original (function, line) -> line in the patched source, for statements
    # that survived the edit
    line_map: dict[tuple[str, int], int] = field(default_factory=dict)

    def map_line(self, function: str, line: int) -> int | None:
        return self.line_map.get((function, line))

    def reverse_line_map(self) -> dict[tuple[str, int], int]:
        return {(fn, new): old for (fn, old), new in self.line_map.items()}


def _zero_lines(stmt: Stmt) -> Stmt:
    """Mark a freshly inserted statement (and its subtree) as line-less."""
    stmt = copy.deepcopy(stmt)
    for inner in walk_block([stmt]):
        inner.line = 0
        inner.stmt_id = -1
    return stmt


def _resolve(program: Program, target: EditTarget) -> tuple[Block, int]:
    """The (block, index) holding the target statement."""
    try:
        fn = program.function(target.function)
    except Exception as exc:
        raise TargetNotFound(f"no function '{target.function}'") from exc
    matches: list[tuple[Block, int]] = []

    def visit(block: Block) -> None:
        for i, stmt in enumerate(block):
            if stmt.line == target.line:
                matches.append((block, i))
            for sub in child_blocks(stmt):
                visit(sub)

    visit(fn.body)
    if target.occurrence >= len(matches):
        raise TargetNotFound(
            f"no statement at {target.function}:{target.line} occurrence {target.occurrence}"
        )
    return matches[target.occurrence]


def apply_patch_detailed(program: Program, patch: Patch) -> AppliedPatch:
    """Apply all edits, bottom-up by position, and rebuild the program."""
    if not patch.edits:
        raise ApplyError("patch has no edits")
    working = copy.deepcopy(program)

    resolved: list[tuple[Block, int, int, Edit]] = []
    modifying_seen: dict[int, Edit] = {}
    for seq, edit in enumerate(patch.edits):
        block, index = _resolve(working, edit.target)
        stmt = block[index]
        if isinstance(edit.action, _MODIFYING + (ReplaceExpr,)):
            prior = modifying_seen.get(id(stmt))
            if prior is not None and not (
                isinstance(prior.action, ReplaceExpr)
                and isinstance(edit.action, ReplaceExpr)
                and not _paths_overlap(prior.action.path, edit.action.path)
            ):
                raise ConflictingEdits(
                    f"two edits modify the statement at {edit.target.function}:{edit.target.line}"
                )
            modifying_seen[id(stmt)] = edit
        if isinstance(edit.action, WrapIf):
            if edit.action.span < 1 or index + edit.action.span > len(block):
                raise ApplyError(
                    f"wrap span {edit.action.span} leaves the block at "
                    f"{edit.target.function}:{edit.target.line}"
                )
        resolved.append((block, index, seq, edit))

    # bottom-up: same block processed at descending indices; per statement the
    # order is InsertAfter, then the modifying edit, then InsertBefore; insert
    # groups run in reverse declaration order so the edit list order survives
    def order_key(item: tuple[Block, int, int, Edit]) -> tuple:
        _, index, seq, edit = item
        rank = {InsertAfter: 0, ReplaceExpr: 1, ReplaceStmt: 1, Delete: 1, WrapIf: 1,
                InsertBefore: 2}[type(edit.action)]
        return (-index, rank, -seq)

    by_block: dict[int, list[tuple[Block, int, int, Edit]]] = {}
    for item in resolved:
        by_block.setdefault(id(item[0]), []).append(item)

    for items in by_block.values():
        for block, index, _, edit in sorted(items, key=order_key):
            action = edit.action
            if isinstance(action, ReplaceExpr):
                try:
                    set_expr(block[index], action.path, copy.deepcopy(action.new_expr))
                except (KeyError, AttributeError, IndexError, TypeError) as exc:
                    raise ApplyError(f"bad expression path {action.path!r}") from exc
            elif isinstance(action, ReplaceStmt):
                block[index] = _zero_lines(action.new_stmt)
            elif isinstance(action, InsertBefore):
                block.insert(index, _zero_lines(action.new_stmt))
            elif isinstance(action, InsertAfter):
                block.insert(index + 1, _zero_lines(action.new_stmt))
            elif isinstance(action, Delete):
                del block[index]
            else:  # WrapIf
                wrapped = block[index: index + action.span]
                guard = copy.deepcopy(action.guard)
                block[index: index + action.span] = [If(guard, wrapped, [], line=0, stmt_id=-1)]

    source = pretty_print(working)
    try:
        rebuilt = parse(source)
    except Exception as exc:
        raise ApplyError(f"patched program is invalid: {exc}") from exc

    line_map: dict[tuple[str, int], int] = {}
    for (fn_w, old_stmt), (_, new_stmt) in zip(walk_program(working), walk_program(rebuilt)):
        if old_stmt.line > 0:
            line_map[(fn_w.name, old_stmt.line)] = new_stmt.line
    return AppliedPatch(rebuilt, source, line_map)


def _paths_overlap(a: ExprPath, b: ExprPath) -> bool:
    shorter = min(len(a), len(b))
    return tuple(a[:shorter]) == tuple(b[:shorter])


def apply_patch(program: Program, patch: Patch) -> Program:
    """New Program with the patch applied; the original is untouched."""
    return apply_patch_detailed(program, patch).program
