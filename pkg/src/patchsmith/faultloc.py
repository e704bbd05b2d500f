"""Test-free fault localization over a captured trace.

The dependency graph is built post hoc from the event log: data edges by
re-evaluating each entered statement's expressions against the reconstructed
environment (respecting short-circuit evaluation, with call results taken from
the recorded Ret events), control edges from the structured nesting of the
executing statement.  Statements entered across call boundaries hang off their
call site, so slices are interprocedural.

Nodes are StmtEnter event indices; edges point strictly backward in the log.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .exceptions import SymptomNotInTrace, TraceMismatch
from .interp import (
    CallEnter,
    ExecutionTrace,
    MiniRaiseError,
    Out,
    Raise,
    Ret,
    StmtEnter,
    VarWrite,
    apply_binary,
    apply_unary,
    expect_bool,
    frame_functions,
    index_read,
    length_of,
)
from .minilang.ast import (
    ArrayLit,
    Assert,
    Assign,
    Binary,
    BoolLit,
    Call,
    Expr,
    ExprStmt,
    ForRange,
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
    child_blocks,
    locate,
    stmt_reads,
    walk_block,
)
from .snapshot import (
    DebugSnapshot,
    LineShouldNotExecute,
    ProblemSpec,
    UnexpectedException,
    VariableWrongValue,
)

MAX_SLICE_EVENTS = 5000
TOP_LOCATIONS = 10


# --- graph ---------------------------------------------------------------------

@dataclass
class GraphNode:
    event_idx: int
    stmt_id: int
    function: str
    line: int
    frame_id: int


@dataclass
class DependencyGraph:
    nodes: dict[int, GraphNode] = field(default_factory=dict)
    data_edges: dict[int, set[int]] = field(default_factory=dict)
    control_edges: dict[int, int] = field(default_factory=dict)
    # a branch whose subtree can leave the function (return/throw) gates every
    # later statement of the frame; kept apart from the structural edge
    escape_edges: dict[int, set[int]] = field(default_factory=dict)
    # relevant-slicing edges: a branch whose subtree writes x, entered after
    # x's last write, could have changed what a later read of x saw
    potential_edges: dict[int, set[int]] = field(default_factory=dict)
    # bookkeeping shared with slicing/ranking:
    producer: dict[int, int] = field(default_factory=dict)  # any event -> its stmt event
    event_frame: dict[int, int] = field(default_factory=dict)
    # (event_idx, frame, name, producer stmt event or None) per VarWrite
    writes: list[tuple[int, int, str, int | None]] = field(default_factory=list)

    def edges_from(self, node: int, include_control: bool) -> set[int]:
        out = set(self.data_edges.get(node, ()))
        if include_control:
            if node in self.control_edges:
                out.add(self.control_edges[node])
            out.update(self.escape_edges.get(node, ()))
            out.update(self.potential_edges.get(node, ()))
        return out


@dataclass(frozen=True)
class SliceCriterion:
    anchor_idx: int
    tracked_vars: frozenset[str] = frozenset()
    include_control: bool = True


@dataclass
class RepairLocation:
    function: str
    line: int
    occurrence: int
    stmt_id: int
    suspiciousness: float


# --- helpers over the program ----------------------------------------------------

def _stmt_index(program: Program) -> dict[int, tuple[str, Stmt]]:
    table: dict[int, tuple[str, Stmt]] = {}
    for fn in program.functions:
        for stmt in walk_block(fn.body):
            table[stmt.stmt_id] = (fn.name, stmt)
    return table


def _branch_parents(program: Program) -> dict[int, int | None]:
    """stmt_id -> stmt_id of the innermost enclosing if/while/for, if any."""
    parents: dict[int, int | None] = {}

    def visit(block, enclosing: int | None) -> None:
        for stmt in block:
            parents[stmt.stmt_id] = enclosing
            inner = stmt.stmt_id if isinstance(stmt, (If, While, ForRange)) else enclosing
            for sub in child_blocks(stmt):
                visit(sub, inner)

    for fn in program.functions:
        visit(fn.body, None)
    return parents


def _escape_branches(program: Program) -> set[int]:
    """Branch statements whose subtree contains a return or throw."""

    def has_escape(block) -> bool:
        return any(
            isinstance(stmt, (Return, Throw)) or any(has_escape(b) for b in child_blocks(stmt))
            for stmt in block
        )

    ids: set[int] = set()
    for fn in program.functions:
        for stmt in walk_block(fn.body):
            if isinstance(stmt, (If, While, ForRange)):
                if any(has_escape(b) for b in child_blocks(stmt)):
                    ids.add(stmt.stmt_id)
    return ids


def _branch_subtree_writes(program: Program) -> dict[int, frozenset[str]]:
    """For each branch statement, the variables its subtree may write."""
    from .minilang.ast import stmt_writes

    table: dict[int, frozenset[str]] = {}
    for fn in program.functions:
        for stmt in walk_block(fn.body):
            if isinstance(stmt, (If, While, ForRange)):
                written: set[str] = set()
                for sub_block in child_blocks(stmt):
                    for inner in walk_block(sub_block):
                        written.update(stmt_writes(inner))
                if isinstance(stmt, ForRange):
                    written.add(stmt.var)
                table[stmt.stmt_id] = frozenset(written)
    return table


# --- trace-driven expression evaluation -------------------------------------------

class _Cut(Exception):
    """The real run aborted mid-statement here (raise or unreturned call)."""


class _Replay:
    """Re-evaluates one statement's expressions against the reconstructed
    environment, pulling call results out of the recorded trace."""

    def __init__(self, env: dict, call_frames: list[int], ret_info: dict):
        self.env = env  # name -> (value, producer stmt event or None)
        self.call_frames = call_frames
        self.next_call = 0
        self.ret_info = ret_info
        self.read_writers: set[int] = set()
        self.read_names: set[str] = set()

    def read(self, name: str):
        value, writer = self.env[name]
        self.read_names.add(name)
        if writer is not None:
            self.read_writers.add(writer)
        return value

    def eval(self, expr: Expr):
        if isinstance(expr, (IntLit, BoolLit, StrLit)):
            return expr.value
        if isinstance(expr, ArrayLit):
            return [self.eval(item) for item in expr.items]
        if isinstance(expr, Var):
            return self.read(expr.name)
        try:
            if isinstance(expr, Unary):
                return apply_unary(expr.op, self.eval(expr.operand))
            if isinstance(expr, Binary):
                if expr.op in ("&&", "||"):
                    left = expect_bool(self.eval(expr.left), "operand")
                    if expr.op == "&&" and not left:
                        return False
                    if expr.op == "||" and left:
                        return True
                    return expect_bool(self.eval(expr.right), "operand")
                left = self.eval(expr.left)
                right = self.eval(expr.right)
                return apply_binary(expr.op, left, right)
            if isinstance(expr, Index):
                base = self.eval(expr.base)
                return index_read(base, self.eval(expr.index))
            if isinstance(expr, Len):
                return length_of(self.eval(expr.arg))
        except MiniRaiseError as exc:
            raise _Cut() from exc
        if isinstance(expr, Call):
            for arg in expr.args:
                self.eval(arg)
            if self.next_call >= len(self.call_frames):
                raise _Cut()  # budget/raise hit before this call started
            frame = self.call_frames[self.next_call]
            self.next_call += 1
            if frame not in self.ret_info:
                raise _Cut()  # the call never returned
            value, producing = self.ret_info[frame]
            if producing is not None:
                self.read_writers.add(producing)
            return value
        raise TypeError(f"unknown expression node {type(expr).__name__}")

    def eval_statement(self, stmt: Stmt) -> None:
        if isinstance(stmt, (Let, Assign, Print)):
            self.eval(stmt.value)
        elif isinstance(stmt, IndexAssign):
            self.eval(stmt.value)
            for ix in stmt.indices:
                self.eval(ix)
            self.read(stmt.base)
        elif isinstance(stmt, (If, While)):
            self.eval(stmt.cond)
        elif isinstance(stmt, ForRange):
            self.eval(stmt.lo)
            self.eval(stmt.hi)
        elif isinstance(stmt, Return):
            if stmt.value is not None:
                self.eval(stmt.value)
        elif isinstance(stmt, Throw):
            self.eval(stmt.message)
        elif isinstance(stmt, Assert):
            self.eval(stmt.cond)
        elif isinstance(stmt, ExprStmt):
            self.eval(stmt.expr)


# --- graph construction ---------------------------------------------------------------

def build_dependencies(trace: ExecutionTrace, program: Program) -> DependencyGraph:
    """Dynamic data and control dependencies of every entered statement."""
    stmt_table = _stmt_index(program)
    branch_parent = _branch_parents(program)
    graph = DependencyGraph()

    # pass 1: positional facts (producers, call queues, return info)
    frame_stack = [0]
    last_stmt_of_frame: dict[int, int | None] = {0: None}
    caller_stmt_of_frame: dict[int, int | None] = {0: None}
    call_queue: dict[int, list[int]] = {}
    ret_info: dict[int, tuple[object, int | None]] = {}

    for event in trace.events:
        if isinstance(event, StmtEnter):
            if event.stmt_id not in stmt_table:
                raise TraceMismatch(f"trace stmt_id {event.stmt_id} not in program")
            fn_name, stmt = stmt_table[event.stmt_id]
            if fn_name != event.function or stmt.line != event.line:
                raise TraceMismatch(
                    f"trace event at {event.function}:{event.line} does not match program"
                )
            last_stmt_of_frame[event.frame_id] = event.idx
            graph.event_frame[event.idx] = event.frame_id
        elif isinstance(event, VarWrite):
            producing = last_stmt_of_frame.get(event.frame_id)
            if producing is None:
                producing = caller_stmt_of_frame.get(event.frame_id)
            if producing is not None:
                graph.producer[event.idx] = producing
            graph.event_frame[event.idx] = event.frame_id
            graph.writes.append((event.idx, event.frame_id, event.name, producing))
        elif isinstance(event, CallEnter):
            parent = frame_stack[-1]
            caller_stmt = last_stmt_of_frame.get(parent)
            caller_stmt_of_frame[event.new_frame_id] = caller_stmt
            last_stmt_of_frame[event.new_frame_id] = None
            if caller_stmt is not None:
                graph.producer[event.idx] = caller_stmt
                call_queue.setdefault(caller_stmt, []).append(event.new_frame_id)
            graph.event_frame[event.idx] = parent
            frame_stack.append(event.new_frame_id)
        elif isinstance(event, Ret):
            last = last_stmt_of_frame.get(event.frame_id)
            producing = None
            if last is not None:
                # only an executed `return` statement produces the value
                enter = trace.events[last]
                if isinstance(enter, StmtEnter) and isinstance(stmt_table[enter.stmt_id][1], Return):
                    producing = last
            ret_info[event.frame_id] = (event.value, producing)
            if last is not None:
                graph.producer[event.idx] = last
            graph.event_frame[event.idx] = event.frame_id
            if frame_stack and frame_stack[-1] == event.frame_id:
                frame_stack.pop()
        elif isinstance(event, Raise):
            producing = last_stmt_of_frame.get(event.frame_id)
            if producing is not None:
                graph.producer[event.idx] = producing
            graph.event_frame[event.idx] = event.frame_id
        elif isinstance(event, Out):
            top = frame_stack[-1]
            producing = last_stmt_of_frame.get(top)
            if producing is not None:
                graph.producer[event.idx] = producing
            graph.event_frame[event.idx] = top

    # pass 2: replay writes and re-evaluate each entered statement
    escape_ids = _escape_branches(program)
    branch_writes = _branch_subtree_writes(program)
    env: dict[int, dict[str, tuple[object, int | None]]] = {0: {}}
    last_enter: dict[tuple[int, int], int] = {}  # (frame, stmt_id) -> event idx
    latest_escape: dict[int, dict[int, int]] = {}  # frame -> {stmt_id: event idx}
    latest_branch: dict[int, dict[int, int]] = {}  # frame -> {stmt_id: event idx}
    write_events: dict[tuple[int, str], int] = {}  # (frame, name) -> VarWrite idx
    for event in trace.events:
        if isinstance(event, CallEnter):
            env[event.new_frame_id] = {}
        elif isinstance(event, VarWrite):
            producing = graph.producer.get(event.idx)
            env.setdefault(event.frame_id, {})[event.name] = (event.value, producing)
            write_events[(event.frame_id, event.name)] = event.idx
        elif isinstance(event, StmtEnter):
            fn_name, stmt = stmt_table[event.stmt_id]
            graph.nodes[event.idx] = GraphNode(
                event.idx, event.stmt_id, fn_name, event.line, event.frame_id
            )
            parent = branch_parent[event.stmt_id]
            if parent is not None:
                governing = last_enter.get((event.frame_id, parent))
            else:
                governing = caller_stmt_of_frame.get(event.frame_id)
            if governing is not None:
                graph.control_edges[event.idx] = governing
            gates = latest_escape.get(event.frame_id)
            if gates:
                others = {idx for sid, idx in gates.items() if sid != event.stmt_id}
                if others:
                    graph.escape_edges[event.idx] = others
            replay = _Replay(
                env.setdefault(event.frame_id, {}),
                call_queue.get(event.idx, []),
                ret_info,
            )
            try:
                replay.eval_statement(stmt)
            except _Cut:
                pass
            if replay.read_writers:
                graph.data_edges[event.idx] = set(replay.read_writers)
            branches_here = latest_branch.get(event.frame_id)
            if branches_here and replay.read_names:
                potential: set[int] = set()
                for name in replay.read_names:
                    last_write = write_events.get((event.frame_id, name), -1)
                    for b_sid, b_evt in branches_here.items():
                        if (b_sid != event.stmt_id and b_evt > last_write
                                and name in branch_writes.get(b_sid, ())):
                            potential.add(b_evt)
                if potential:
                    graph.potential_edges[event.idx] = potential
            last_enter[(event.frame_id, event.stmt_id)] = event.idx
            if event.stmt_id in escape_ids:
                latest_escape.setdefault(event.frame_id, {})[event.stmt_id] = event.idx
            if event.stmt_id in branch_writes:
                latest_branch.setdefault(event.frame_id, {})[event.stmt_id] = event.idx
    return graph


# --- slicing criterion --------------------------------------------------------------

def criterion_from_problem(snapshot: DebugSnapshot, trace: ExecutionTrace) -> SliceCriterion:
    """Anchor and tracked variables for the snapshot's declared problem."""
    problem = snapshot.problem
    if problem is None:
        raise SymptomNotInTrace("snapshot has no problem set")
    program = snapshot.program()

    if isinstance(problem, UnexpectedException):
        final = trace.final_raise()
        if (final is None or final.function != problem.function
                or final.line != problem.line or final.kind != problem.raise_kind):
            raise SymptomNotInTrace(
                f"no {problem.raise_kind} raised at {problem.function}:{problem.line}"
            )
        tracked: set[str] = set()
        for stmt_id in locate(program, problem.function, problem.line):
            fn = program.function(problem.function)
            for stmt in walk_block(fn.body):
                if stmt.stmt_id == stmt_id:
                    tracked.update(stmt_reads(stmt))
        return SliceCriterion(final.idx, frozenset(tracked), include_control=True)

    if isinstance(problem, LineShouldNotExecute):
        for event in trace.events:
            if (isinstance(event, StmtEnter) and event.function == problem.function
                    and event.line == problem.line):
                return SliceCriterion(event.idx, frozenset(), include_control=True)
        raise SymptomNotInTrace(
            f"line {problem.function}:{problem.line} never executed"
        )

    functions = frame_functions(trace)
    last_write: VarWrite | None = None
    for event in trace.events[: snapshot.stop_idx + 1]:
        if (isinstance(event, VarWrite) and event.name == problem.name
                and functions.get(event.frame_id) == problem.function):
            last_write = event
    if last_write is None:
        raise SymptomNotInTrace(
            f"'{problem.name}' never written in {problem.function} before the stop point"
        )
    return SliceCriterion(last_write.idx, frozenset({problem.name}), include_control=True)


def _anchor_statement(graph: DependencyGraph, anchor_idx: int) -> int:
    if anchor_idx in graph.nodes:
        return anchor_idx
    producing = graph.producer.get(anchor_idx)
    if producing is None:
        raise SymptomNotInTrace(
            "criterion anchor has no producing statement (value comes from the entry input)"
        )
    return producing


# --- backward slice ----------------------------------------------------------------

def backward_slice(
    graph: DependencyGraph,
    criterion: SliceCriterion,
    max_slice_events: int = MAX_SLICE_EVENTS,
) -> set[int]:
    """Transitive backward closure from the criterion, as StmtEnter indices.

    Capped at `max_slice_events`, dropping the oldest events first; that cap
    is what makes the slice partial.
    """
    anchor_stmt = _anchor_statement(graph, criterion.anchor_idx)
    anchor_frame = graph.event_frame.get(criterion.anchor_idx, 0)

    seeds = {anchor_stmt}
    for name in criterion.tracked_vars:
        newest: tuple[int, int | None] | None = None
        for idx, frame, written, producing in graph.writes:
            if idx > criterion.anchor_idx:
                break
            if written == name and frame == anchor_frame:
                newest = (idx, producing)
        if newest is not None and newest[1] is not None:
            seeds.add(newest[1])

    visited: set[int] = set()
    frontier = list(seeds)
    while frontier:
        node = frontier.pop()
        if node in visited:
            continue
        visited.add(node)
        for neighbor in graph.edges_from(node, criterion.include_control):
            if neighbor not in visited:
                frontier.append(neighbor)

    if len(visited) > max_slice_events:
        kept = sorted(visited, reverse=True)[:max_slice_events]
        visited = set(kept)
        visited.add(anchor_stmt)
    return visited


# --- ranking --------------------------------------------------------------------------

def rank_locations(
    graph: DependencyGraph,
    criterion: SliceCriterion,
    slice_events: set[int],
    trace: ExecutionTrace,
    snapshot: DebugSnapshot,
) -> list[RepairLocation]:
    """Distinct (function, line) repair locations, most suspicious first.

    suspiciousness = 0.5/(1+hops) + 0.3*recency + 0.2*frame_match, where hops
    is the shortest dependency distance from the anchor, recency compares the
    location's newest attributed event against the stop point, and frame_match
    rewards the innermost snapshot frame.
    """
    if not slice_events:
        return []
    anchor_stmt = _anchor_statement(graph, criterion.anchor_idx)

    # BFS hop distances from the anchor over the slice relation
    hops: dict[int, int] = {anchor_stmt: 0}
    frontier = [anchor_stmt]
    while frontier:
        nxt: list[int] = []
        for node in frontier:
            for neighbor in graph.edges_from(node, criterion.include_control):
                if neighbor not in hops:
                    hops[neighbor] = hops[node] + 1
                    nxt.append(neighbor)
        frontier = nxt

    # newest event attributed to each statement occurrence (its own writes,
    # raises, calls and prints count toward recency)
    attributed: dict[int, int] = {}
    for event_idx, producing in graph.producer.items():
        attributed[producing] = max(attributed.get(producing, producing), event_idx)

    # dynamic occurrence ordinals per (function, line)
    occurrences: dict[tuple[str, int], list[int]] = {}
    for event in trace.events:
        if isinstance(event, StmtEnter):
            occurrences.setdefault((event.function, event.line), []).append(event.idx)

    innermost = snapshot.stack[0].frame_id if snapshot.stack else -1
    stop_idx = snapshot.stop_idx if snapshot.stop_idx > 0 else 1

    by_location: dict[tuple[str, int], list[int]] = {}
    for idx in sorted(slice_events):
        node = graph.nodes.get(idx)
        if node is None:
            continue
        by_location.setdefault((node.function, node.line), []).append(idx)

    results: list[RepairLocation] = []
    for (function, line), events in by_location.items():
        latest = max(events)
        node = graph.nodes[latest]
        min_hops = min(hops.get(e, len(graph.nodes)) for e in events)
        newest_attributed = max(max(attributed.get(e, e), e) for e in events)
        recency = min(1.0, newest_attributed / stop_idx)
        frame_match = 1.0 if node.frame_id == innermost else 0.0
        score = 0.5 * (1.0 / (1 + min_hops)) + 0.3 * recency + 0.2 * frame_match
        occurrence = occurrences[(function, line)].index(latest)
        results.append(RepairLocation(function, line, occurrence, node.stmt_id, score))

    results.sort(key=lambda loc: (-loc.suspiciousness, -loc.line, loc.stmt_id))
    return results


# --- one-call convenience ----------------------------------------------------------------

@dataclass
class LocalizationResult:
    graph: DependencyGraph
    criterion: SliceCriterion
    slice_events: set[int]
    locations: list[RepairLocation]


def localize(snapshot: DebugSnapshot, trace: ExecutionTrace,
             program: Program | None = None,
             max_slice_events: int = MAX_SLICE_EVENTS) -> LocalizationResult:
    """build_dependencies -> criterion_from_problem -> backward_slice -> rank."""
    if program is None:
        program = snapshot.program()
    graph = build_dependencies(trace, program)
    criterion = criterion_from_problem(snapshot, trace)
    slice_events = backward_slice(graph, criterion, max_slice_events)
    locations = rank_locations(graph, criterion, slice_events, trace, snapshot)
    return LocalizationResult(graph, criterion, slice_events, locations)
