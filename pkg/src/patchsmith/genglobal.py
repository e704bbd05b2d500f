"""Multi-location repair strategies.

Each coordinated-edit patch carries the relationship that produced it:

  DU    hoist a definition and use it at the repair location
  SU    set a variable up immediately before the location (single edit)
  OA    an if-wrap plus one coordinated edit elsewhere in the slice
  RIF   the same change transplanted to structurally similar statements
  EOH   effectively single-hunk; routed to the local templates
  DIF / ONPF / FU   discovered by iterative repair with re-localization

Iterative repair keeps a partial candidate alive when it either resolves the
current symptom but surfaces a new failure (the next round chases the derived
symptom), or strictly extends the run's non-failing prefix.  Accumulated edits
are retargeted into the original program's coordinates through the chained
line maps, so the final multi-edit patch applies to the original in one step.
"""

from __future__ import annotations

import copy
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

from .edits import (
    Edit,
    EditTarget,
    InsertBefore,
    Patch,
    Relationship,
    ReplaceExpr,
    WrapIf,
    apply_patch_detailed,
    patch_key,
)
from .exceptions import ApplyError, NoFailure, PatchsmithError, SymptomNotInTrace, TransplantFailed
from .faultloc import RepairLocation, localize
from .genlocal import (
    RepairContext,
    _guards,
    generate_local,
    resolve_location,
    runtime_variants,
    static_occurrence,
    static_scope,
)
from .interp import ExecutionTrace, Raise, StmtEnter, VarWrite, execute, frame_functions
from .minilang import parse
from .minilang.ast import (
    Assign,
    Binary,
    Call,
    Expr,
    ForRange,
    Index,
    IntLit,
    Len,
    Let,
    Program,
    Stmt,
    Unary,
    Var,
    get_expr,
    iter_exprs,
    stmt_reads,
    stmt_writes,
    walk_block,
    walk_program,
)
from .minilang.parser import KEYWORDS, tokenize
from .minilang.printer import format_expr, format_stmt
from .snapshot import DebugSnapshot, derive_symptom
from .validate import remap_problem, symptom_resolved, validate
from .values import values_equal

SIBLING_THRESHOLD = 0.8
GENERATION_LOCATIONS = 8
STRATEGY_PATTERN_DU = "pattern-du"
STRATEGY_PATTERN_SU = "pattern-su"
STRATEGY_PATTERN_OA = "pattern-oa"
STRATEGY_SIMULTANEOUS = "simultaneous"
STRATEGY_ITERATIVE = "iterative"


@dataclass(frozen=True)
class SearchConfig:
    beam_width: int = 5
    max_depth: int = 3
    per_round_candidates: int = 200
    total_validation_budget: int = 2000

    def __post_init__(self):
        if min(self.beam_width, self.max_depth, self.per_round_candidates,
               self.total_validation_budget) <= 0:
            raise ValueError("search configuration values must be positive")


# --- sibling detection (RIF) ------------------------------------------------------

@dataclass
class SiblingMatch:
    location: RepairLocation
    similarity: float
    mapping: dict[str, str]  # seed identifier -> sibling identifier


def _abstract_tokens(text: str) -> tuple[list[str], list[str]]:
    """(abstracted sequence, raw texts); identifiers collapse to 'ID'."""
    raw = [t.text for t in tokenize(text) if t.kind != "eof"]
    kinds = []
    for tok in tokenize(text):
        if tok.kind == "eof":
            continue
        if tok.kind == "ident" and tok.text not in KEYWORDS:
            kinds.append("ID")
        elif tok.kind == "int":
            kinds.append("INT")
        else:
            kinds.append(tok.text)
    return kinds, raw


def _edit_similarity(a: list[str], b: list[str]) -> float:
    if not a and not b:
        return 1.0
    prev = list(range(len(b) + 1))
    for i, x in enumerate(a, 1):
        cur = [i]
        for j, y in enumerate(b, 1):
            cost = 0 if x == y else 1
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + cost))
        prev = cur
    return 1.0 - prev[-1] / max(len(a), len(b))


def sibling_locations(program: Program, seed: RepairLocation,
                      threshold: float = SIBLING_THRESHOLD) -> list[SiblingMatch]:
    """Statements whose identifier-abstracted shape matches the seed's."""
    if not 0 < threshold <= 1:
        raise ValueError("threshold must be in (0, 1]")
    _, seed_block, seed_index = resolve_location(program, seed)
    seed_stmt = seed_block[seed_index]
    seed_abs, seed_raw = _abstract_tokens(format_stmt(seed_stmt))

    import difflib

    matches: list[SiblingMatch] = []
    for fn, stmt in walk_program(program):
        if stmt is seed_stmt or type(stmt) is not type(seed_stmt):
            continue
        abs_tokens, raw = _abstract_tokens(format_stmt(stmt))
        similarity = _edit_similarity(seed_abs, abs_tokens)
        if similarity < threshold:
            continue
        mapping: dict[str, str] = {}
        consistent = True
        matcher = difflib.SequenceMatcher(a=seed_abs, b=abs_tokens, autojunk=False)
        for tag, i1, i2, j1, j2 in matcher.get_opcodes():
            if tag != "equal":
                continue
            for off in range(i2 - i1):
                if seed_abs[i1 + off] != "ID":
                    continue
                source = seed_raw[i1 + off]
                target = raw[j1 + off]
                if mapping.get(source, target) != target:
                    consistent = False
                mapping[source] = target
        if not consistent:
            continue
        matches.append(SiblingMatch(
            RepairLocation(fn.name, stmt.line, 0, stmt.stmt_id, 0.0),
            similarity, mapping,
        ))
    matches.sort(key=lambda m: (-m.similarity, m.location.function, m.location.line))
    return matches


def _rename_expr(expr: Expr, mapping: dict[str, str]) -> Expr:
    expr = copy.deepcopy(expr)

    def go(e: Expr) -> None:
        if isinstance(e, Var):
            e.name = mapping.get(e.name, e.name)
        elif isinstance(e, Unary):
            go(e.operand)
        elif isinstance(e, Binary):
            go(e.left)
            go(e.right)
        elif isinstance(e, Call):
            e.callee = mapping.get(e.callee, e.callee)
            for a in e.args:
                go(a)
        elif isinstance(e, Index):
            go(e.base)
            go(e.index)
        elif isinstance(e, Len):
            go(e.arg)
        elif hasattr(e, "items"):
            for item in e.items:
                go(item)

    go(expr)
    return expr


def _transplant(program: Program, edit: Edit, sibling: SiblingMatch) -> Edit:
    """The seed edit re-expressed at the sibling through its identifier map."""
    action = edit.action
    target = EditTarget(sibling.location.function, sibling.location.line,
                        sibling.location.occurrence)
    _, block, index = resolve_location(program, sibling.location)
    sibling_stmt = block[index]
    if isinstance(action, ReplaceExpr):
        try:
            get_expr(sibling_stmt, action.path)
        except (KeyError, AttributeError, IndexError, TypeError) as exc:
            raise TransplantFailed(
                f"sibling at {target.function}:{target.line} has no expression "
                f"at path {action.path!r}"
            ) from exc
        renamed = _rename_expr(action.new_expr, sibling.mapping)
        _check_names_in_scope(program, sibling, renamed)
        return Edit(target, ReplaceExpr(action.path, renamed))
    if isinstance(action, WrapIf):
        renamed = _rename_expr(action.guard, sibling.mapping)
        _check_names_in_scope(program, sibling, renamed)
        return Edit(target, WrapIf(renamed, action.span))
    raise TransplantFailed(f"cannot transplant a {type(action).__name__} edit")


def _check_names_in_scope(program: Program, sibling: SiblingMatch, expr: Expr) -> None:
    fn, block, index = resolve_location(program, sibling.location)
    scope = set(static_scope(fn, block[index])) | set(stmt_writes(block[index]))
    for _, sub in _walk_expr(expr):
        if isinstance(sub, Var) and sub.name not in scope:
            raise TransplantFailed(
                f"'{sub.name}' is not in scope at "
                f"{sibling.location.function}:{sibling.location.line}"
            )


def _walk_expr(expr: Expr):
    stack = [((), expr)]
    while stack:
        path, node = stack.pop()
        yield path, node
        if isinstance(node, Unary):
            stack.append((path, node.operand))
        elif isinstance(node, Binary):
            stack.append((path, node.left))
            stack.append((path, node.right))
        elif isinstance(node, Call):
            stack.extend((path, a) for a in node.args)
        elif isinstance(node, Index):
            stack.append((path, node.base))
            stack.append((path, node.index))
        elif isinstance(node, Len):
            stack.append((path, node.arg))
        elif hasattr(node, "items"):
            stack.extend((path, item) for item in node.items)


def simultaneous_repair(program: Program, seed_patch: Patch,
                        siblings: list[SiblingMatch]) -> list[Patch]:
    """Seed edit plus its transplants as one RIF-tagged patch."""
    if len(seed_patch.edits) != 1:
        raise ValueError("simultaneous repair expects a single-edit seed patch")
    seed_edit = seed_patch.edits[0]
    transplants: list[Edit] = []
    for sibling in siblings:
        try:
            transplants.append(_transplant(program, seed_edit, sibling))
        except TransplantFailed:
            continue
    if not transplants:
        return []
    edits = [seed_edit] + transplants
    return [Patch(
        edits, STRATEGY_SIMULTANEOUS, Relationship.RIF,
        provenance=f"co-evolution of {len(edits)} similar statements "
                   f"(seed: {seed_patch.provenance})",
    )]


# --- pattern generators (DU, SU, OA) ----------------------------------------------------

def _fresh_name(program: Program, prefix: str = "h") -> str:
    used = {fn.name for fn in program.functions}
    for fn in program.functions:
        used.update(fn.params)
        for stmt in walk_block(fn.body):
            used.update(stmt_writes(stmt))
            used.update(stmt_reads(stmt))
    n = 0
    while f"{prefix}{n}" in used:
        n += 1
    return f"{prefix}{n}"


def _dominating_points(program: Program, location) -> list[EditTarget]:
    """Insertion anchors that dominate the location, nearest first.

    Walking outward: the location itself, its predecessors in the same block,
    then the enclosing statement and its predecessors, and so on.
    """
    from .minilang.ast import child_blocks

    fn = program.function(location.function)
    path: list[tuple[list, int]] = []  # (block, index) innermost first

    def find(block) -> bool:
        for i, stmt in enumerate(block):
            if stmt.line == location.line:
                path.append((block, i))
                return True
            for sub in child_blocks(stmt):
                if find(sub):
                    path.append((block, i))
                    return True
        return False

    find(fn.body)
    anchors: list[EditTarget] = []
    seen: set[int] = set()
    for block, index in path:
        for i in range(index, -1, -1):
            line = block[i].line
            if line not in seen:
                seen.add(line)
                anchors.append(EditTarget(location.function, line))
    return anchors[:8]


def _hoistable_subexprs(stmt: Stmt) -> list[Expr]:
    """Subexpressions worth naming: contain a variable, are not calls."""
    out: list[Expr] = []
    seen: set[str] = set()
    for _, expr in iter_exprs(stmt):
        if isinstance(expr, (Var, Index, Len, Binary, Unary)):
            if isinstance(expr, Var) or any(isinstance(s, Var) for _, s in _walk_expr(expr)):
                if any(isinstance(s, Call) for _, s in _walk_expr(expr)):
                    continue
                text = format_expr(expr)
                if text not in seen:
                    seen.add(text)
                    out.append(expr)
    return out


def du_patches(program: Program, location, context: RepairContext,
               cap: int = 40) -> list[Patch]:
    """Hoist `let v = E;` to a dominating point and use v at the location."""
    fn, block, index = resolve_location(program, location)
    stmt = block[index]
    fresh = _fresh_name(program)
    points = _dominating_points(program, location)
    out: list[Patch] = []
    for expr in _hoistable_subexprs(stmt):
        expr_text = format_expr(expr)
        occurrence_paths = [path for path, sub in iter_exprs(stmt)
                            if format_expr(sub) == expr_text]
        if not occurrence_paths:
            continue
        # drop nested occurrences: keep paths that are not extensions of others
        roots = [p for p in occurrence_paths
                 if not any(q != p and p[:len(q)] == q for q in occurrence_paths)]
        needed = set(n for _, sub in _walk_expr(expr) if isinstance(sub, Var)
                     for n in [sub.name])
        for point in points:
            try:
                pfn, pblock, pindex = resolve_location(program, point)
            except PatchsmithError:
                continue
            scope_at_point = set(static_scope(pfn, pblock[pindex]))
            if not needed <= scope_at_point:
                continue
            edits = [Edit(point, InsertBefore(Let(fresh, copy.deepcopy(expr))))]
            for path in roots:
                edits.append(Edit(
                    EditTarget(location.function, location.line,
                               static_occurrence(location)),
                    ReplaceExpr(path, Var(fresh)),
                ))
            out.append(Patch(
                edits, STRATEGY_PATTERN_DU, Relationship.DU,
                provenance=f"hoist '{expr_text}' as {fresh} before "
                           f"{point.function}:{point.line}, use at "
                           f"{location.function}:{location.line}",
            ))
            if len(out) >= cap:
                return out
    return out


def su_patches(program: Program, location, context: RepairContext,
               slice_names: set[str], cap: int = 40) -> list[Patch]:
    """Insert `x = E;` immediately before the location for slice variables."""
    fn, block, index = resolve_location(program, location)
    stmt = block[index]
    scope = static_scope(fn, stmt)
    variants = runtime_variants(context, location)
    target = EditTarget(location.function, location.line,
                        static_occurrence(location))
    out: list[Patch] = []
    for name in sorted(n for n in scope if n in slice_names):
        own = variants.get(name)
        pool: list[Expr] = [IntLit(0), IntLit(1)]
        for other in sorted(scope):
            if other != name and variants.get(other) == own and own is not None:
                pool.append(Var(other))
        for value in pool:
            if own is not None and isinstance(value, IntLit) and own != "Int":
                continue
            out.append(Patch(
                [Edit(target, InsertBefore(Assign(name, value)))],
                STRATEGY_PATTERN_SU,
                provenance=f"set up {name} = {format_expr(value)} before "
                           f"{location.function}:{location.line}",
            ))
            if len(out) >= cap:
                return out
    return out


def oa_patches(program: Program, location, context: RepairContext,
               other_locations: list[RepairLocation], cap: int = 60) -> list[Patch]:
    """If-wrap at the location coordinated with one edit at another slice statement."""
    fn, block, index = resolve_location(program, location)
    stmt = block[index]
    scope = static_scope(fn, stmt)
    variants = runtime_variants(context, location)
    wraps = _guards(fn, stmt, block, index, scope, variants)[:6]
    target = EditTarget(location.function, location.line,
                        static_occurrence(location))
    out: list[Patch] = []
    for other in other_locations[:3]:
        if (other.function, other.line) == (location.function, location.line):
            continue
        try:
            seconds = generate_local(program, other, context, cap=10)
        except PatchsmithError:
            continue
        for wrap_action, wrap_label in wraps:
            for second in seconds:
                out.append(Patch(
                    [Edit(target, wrap_action)] + list(second.edits),
                    STRATEGY_PATTERN_OA, Relationship.OA,
                    provenance=f"{wrap_label} at {location.function}:{location.line} "
                               f"with {second.provenance}",
                ))
                if len(out) >= cap:
                    return out
    return out


def pattern_patches(program: Program, location, context: RepairContext,
                    slice_names: set[str],
                    other_locations: list[RepairLocation]) -> list[Patch]:
    """DU, SU and OA candidates for one location (EOH rides on generate_local)."""
    out = du_patches(program, location, context)
    out += su_patches(program, location, context, slice_names)
    out += oa_patches(program, location, context, other_locations)
    return out


# --- iterative repair (DIF, ONPF, FU) ----------------------------------------------------

def _survival(trace: ExecutionTrace) -> int:
    """Number of statements entered before the run failed (all, if it didn't)."""
    count = 0
    for event in trace.events:
        if isinstance(event, Raise):
            break
        if isinstance(event, StmtEnter):
            count += 1
    return count


def _write_sequences(trace: ExecutionTrace) -> dict[tuple[str, str], list]:
    """(function, variable) -> ordered written values."""
    functions = frame_functions(trace)
    seqs: dict[tuple[str, str], list] = {}
    for event in trace.events:
        if isinstance(event, VarWrite):
            fn = functions.get(event.frame_id, "")
            seqs.setdefault((fn, event.name), []).append(event.value)
    return seqs


def _changed_variables(before: ExecutionTrace, after: ExecutionTrace) -> set[tuple[str, str]]:
    """Variables written in both runs whose value sequences differ."""
    a = _write_sequences(before)
    b = _write_sequences(after)
    changed = set()
    for key in a.keys() & b.keys():
        va, vb = a[key], b[key]
        if len(va) != len(vb) or not all(values_equal(x, y) for x, y in zip(va, vb)):
            changed.add(key)
    return changed


@dataclass
class _Partial:
    source: str
    program: Program
    trace: ExecutionTrace
    problem: object  # current symptom being chased
    edits: list[Edit] = field(default_factory=list)  # retargeted to the original
    to_orig: dict[tuple[str, int], int] = field(default_factory=dict)
    crossed_new_symptom: bool = False
    changed_so_far: list[set[tuple[str, str]]] = field(default_factory=list)
    chain_notes: list[str] = field(default_factory=list)
    survival: int = 0


@dataclass
class IterativeResult:
    patches: list[Patch]
    budget_exhausted: bool = False
    validations: int = 0


def _identity_line_map(program: Program) -> dict[tuple[str, int], int]:
    table = {}
    for fn, stmt in walk_program(program):
        table[(fn.name, stmt.line)] = stmt.line
    return table


def _relationship_for(partial: _Partial, final_edit: Edit, final_changed: bool,
                      program: Program) -> Relationship:
    """FU if a later edit touches state an earlier edit disturbed, else ONPF
    when the chain crossed a derived symptom, else DIF."""
    edit_list = partial.edits + [final_edit]
    for i, changed in enumerate(partial.changed_so_far):
        for later in edit_list[i + 1:]:
            try:
                _, block, index = resolve_location(program, later.target)
            except PatchsmithError:
                continue
            stmt = block[index]
            touched = set(stmt_reads(stmt)) | set(stmt_writes(stmt))
            if any((later.target.function, name) in changed for name in touched):
                return Relationship.FU
    if partial.crossed_new_symptom:
        return Relationship.ONPF
    return Relationship.DIF


def iterative_repair(
    snapshot: DebugSnapshot,
    trace: ExecutionTrace,
    config: SearchConfig = SearchConfig(),
    program: Program | None = None,
) -> IterativeResult:
    """Beam search over localize -> generate -> simulate rounds."""
    if program is None:
        program = snapshot.program()
    if snapshot.problem is None:
        raise SymptomNotInTrace("iterative repair needs a problem on the snapshot")
    original_program = program
    budget = config.total_validation_budget
    validations = 0
    exhausted = False

    root = _Partial(
        source=snapshot.program_source,
        program=program,
        trace=trace,
        problem=snapshot.problem,
        to_orig=_identity_line_map(program),
        survival=_survival(trace),
    )
    beam = [root]
    finished: list[tuple[int, str, Patch]] = []
    seen_chains: set[frozenset] = set()

    for depth in range(config.max_depth):
        candidates: list[tuple] = []
        for partial in beam:
            try:
                working_snapshot = replace(
                    snapshot, program_source=partial.source, problem=partial.problem,
                    stop_idx=max(0, len(partial.trace.events) - 1),
                )
                loc_result = localize(working_snapshot, partial.trace, partial.program)
            except PatchsmithError:
                continue
            context = RepairContext(working_snapshot, partial.trace, partial.program)
            locals_here: list[Patch] = []
            for location in loc_result.locations[:GENERATION_LOCATIONS]:
                try:
                    locals_here += generate_local(partial.program, location, context)
                except PatchsmithError:
                    continue
                if len(locals_here) >= config.per_round_candidates:
                    break
            for cand in locals_here[: config.per_round_candidates]:
                if validations >= budget:
                    exhausted = True
                    break
                edit = cand.edits[0]
                key = (edit.target.function, edit.target.line)
                orig_line = partial.to_orig.get(key)
                if orig_line is None:
                    continue  # targets a statement with no original counterpart
                retargeted = Edit(
                    EditTarget(edit.target.function, orig_line, edit.target.occurrence),
                    edit.action,
                )
                chain_key = frozenset(
                    [*(str(e) for e in partial.edits), str(retargeted)]
                )
                if chain_key in seen_chains:
                    continue
                seen_chains.add(chain_key)
                try:
                    applied = apply_patch_detailed(partial.program, cand)
                except ApplyError:
                    continue
                patched_trace = execute(applied.program, snapshot.entry, snapshot.limits)
                validations += 1
                mapped = remap_problem(partial.problem, applied)
                resolved_now = (mapped is not None
                                and symptom_resolved(mapped, patched_trace))
                note = f"{cand.provenance}"
                if resolved_now and patched_trace.outcome.is_completed:
                    relationship = None
                    all_edits = partial.edits + [retargeted]
                    if len(all_edits) > 1:
                        relationship = _relationship_for(
                            partial, retargeted,
                            final_changed=False, program=original_program,
                        )
                    provenance = " ; then ".join(partial.chain_notes + [note])
                    try:
                        patch = Patch(all_edits, STRATEGY_ITERATIVE, relationship,
                                      provenance=provenance)
                        check = validate(snapshot, patch, original_trace=trace,
                                         program=original_program)
                        validations += 1
                    except (ApplyError, ValueError):
                        continue
                    if check.resolved:
                        finished.append((check.score, "".join(sorted(map(str, patch_key(patch)))), patch))
                elif resolved_now and patched_trace.outcome.is_raised:
                    try:
                        new_problem = derive_symptom(patched_trace)
                    except NoFailure:
                        continue
                    changed = _changed_variables(partial.trace, patched_trace)
                    candidates.append((
                        _survival(patched_trace), str(patch_key(cand)), _Partial(
                            source=applied.source,
                            program=applied.program,
                            trace=patched_trace,
                            problem=new_problem,
                            edits=partial.edits + [retargeted],
                            to_orig=_compose_line_maps(partial.to_orig, applied.line_map),
                            crossed_new_symptom=True,
                            changed_so_far=partial.changed_so_far + [changed],
                            chain_notes=partial.chain_notes + [
                                note + f" -> new failure {new_problem.raise_kind}"
                                       f"@{new_problem.function}:{new_problem.line}"],
                            survival=_survival(patched_trace),
                        )))
                else:
                    survival = _survival(patched_trace)
                    if survival > partial.survival and not patched_trace.outcome.kind == "budget_exceeded":
                        changed = _changed_variables(partial.trace, patched_trace)
                        candidates.append((
                            survival, str(patch_key(cand)), _Partial(
                                source=applied.source,
                                program=applied.program,
                                trace=patched_trace,
                                problem=_remap_or_keep(partial.problem, applied),
                                edits=partial.edits + [retargeted],
                                to_orig=_compose_line_maps(partial.to_orig, applied.line_map),
                                crossed_new_symptom=partial.crossed_new_symptom,
                                changed_so_far=partial.changed_so_far + [changed],
                                chain_notes=partial.chain_notes + [
                                    note + f" -> longer clean prefix ({survival})"],
                                survival=survival,
                            )))
            if exhausted:
                break
        if exhausted or not candidates:
            break
        candidates.sort(key=lambda c: (-c[0], c[1]))
        beam = [c[2] for c in candidates[: config.beam_width]]

    finished.sort(key=lambda f: (-f[0], f[1]))
    unique: list[Patch] = []
    seen_keys: set[frozenset] = set()
    for _, _, patch in finished:
        key = patch_key(patch)
        if key not in seen_keys:
            seen_keys.add(key)
            unique.append(patch)
    return IterativeResult(unique, exhausted, validations)


def _compose_line_maps(to_orig: dict[tuple[str, int], int],
                       line_map: dict[tuple[str, int], int]) -> dict[tuple[str, int], int]:
    """(fn, line in new version) -> line in the original."""
    composed: dict[tuple[str, int], int] = {}
    for (fn, old_line), new_line in line_map.items():
        orig = to_orig.get((fn, old_line))
        if orig is not None:
            composed[(fn, new_line)] = orig
    return composed


def _remap_or_keep(problem, applied) -> object:
    mapped = remap_problem(problem, applied)
    return mapped if mapped is not None else problem


# --- run all generators in parallel ---------------------------------------------------------

@dataclass
class GeneratorRun:
    patches: list[Patch]
    budget_exhausted: bool = False


def run_all_generators(
    snapshot: DebugSnapshot,
    trace: ExecutionTrace,
    config: SearchConfig = SearchConfig(),
    program: Program | None = None,
    llm_enabled: bool = True,
) -> GeneratorRun:
    """Fan out every strategy, merge, dedup by edit set, deterministic order.

    Generators run as independent tasks over immutable inputs; the merged
    order is (strategy name, generation index) regardless of completion order.
    """
    if program is None:
        program = snapshot.program()
    loc_result = localize(snapshot, trace, program)
    locations = loc_result.locations[:GENERATION_LOCATIONS]
    context = RepairContext(snapshot, trace, program)
    slice_names: set[str] = set()
    for idx in loc_result.slice_events:
        node = loc_result.graph.nodes.get(idx)
        if node is None:
            continue
        fn = program.function(node.function)
        for stmt in walk_block(fn.body):
            if stmt.stmt_id == node.stmt_id:
                slice_names.update(stmt_reads(stmt))
                slice_names.update(stmt_writes(stmt))

    def task_local() -> list[Patch]:
        out: list[Patch] = []
        for location in locations:
            out += generate_local(program, location, context)
        return out

    def task_pattern() -> list[Patch]:
        out: list[Patch] = []
        for location in locations:
            out += pattern_patches(program, location, context, slice_names, locations)
        return out

    def task_simultaneous() -> list[Patch]:
        out: list[Patch] = []
        for location in locations:
            siblings = sibling_locations(program, location)
            if not siblings:
                continue
            seeds = generate_local(program, location, context, cap=12)
            for seed in seeds:
                out += simultaneous_repair(program, seed, siblings)
        return out

    def task_iterative() -> IterativeResult:
        return iterative_repair(snapshot, trace, config, program)

    def task_llm() -> list[Patch]:
        from .prompt import conversational_repair, external_generator_configured

        if not (llm_enabled and external_generator_configured()) or not locations:
            return []

        def validate_candidate(patch: Patch):
            try:
                return validate(snapshot, patch, original_trace=trace, program=program)
            except ApplyError:
                return None

        return conversational_repair(snapshot, trace, program, locations[0],
                                     validate_candidate)

    with ThreadPoolExecutor(max_workers=5) as pool:
        f_local = pool.submit(task_local)
        f_pattern = pool.submit(task_pattern)
        f_sim = pool.submit(task_simultaneous)
        f_iter = pool.submit(task_iterative)
        f_llm = pool.submit(task_llm)
        local_patches = f_local.result()
        pattern_out = f_pattern.result()
        sim_patches = f_sim.result()
        iter_result = f_iter.result()
        llm_patches = f_llm.result()

    tagged: list[tuple[str, int, Patch]] = []
    for source in (local_patches, pattern_out, sim_patches, iter_result.patches, llm_patches):
        counters: dict[str, int] = {}
        for patch in source:
            n = counters.get(patch.strategy, 0)
            counters[patch.strategy] = n + 1
            tagged.append((patch.strategy, n, patch))
    tagged.sort(key=lambda t: (t[0], t[1]))

    merged: list[Patch] = []
    seen: set[frozenset] = set()
    for _, _, patch in tagged:
        key = patch_key(patch)
        if key not in seen:
            seen.add(key)
            merged.append(patch)
    return GeneratorRun(merged, iter_result.budget_exhausted)
