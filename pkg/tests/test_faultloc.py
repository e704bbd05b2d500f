"""Dependency graph, backward slice, and location ranking."""

import pytest

from patchsmith.exceptions import SymptomNotInTrace, TraceMismatch
from patchsmith.faultloc import (
    SliceCriterion,
    backward_slice,
    build_dependencies,
    criterion_from_problem,
    localize,
    rank_locations,
)
from patchsmith.interp import EntryCall, StmtEnter, execute
from patchsmith.minilang import parse
from patchsmith.snapshot import (
    AtEvent,
    LineShouldNotExecute,
    UnexpectedException,
    VariableWrongValue,
    capture,
    derive_symptom,
)

from dep_oracle import DependencyRecorder
from genprog import random_program

STRAIGHT = """fn main() {
    let a = 1;
    let b = 2;
    let c = a + 1;
    assert(c == 3);
}
"""


def _enters(trace):
    return [e.idx for e in trace.events if isinstance(e, StmtEnter)]


def test_single_read_creates_single_data_edge():
    program = parse(STRAIGHT)
    trace = execute(program, EntryCall.of("main"))
    graph = build_dependencies(trace, program)
    enters = _enters(trace)
    # c = a + 1 (3rd statement) reads only a (1st statement)
    assert graph.data_edges[enters[2]] == {enters[0]}
    # assert reads only c
    assert graph.data_edges[enters[3]] == {enters[2]}


def test_structural_control_edge_points_to_governing_if():
    source = """fn main() {
    let a = 1;
    if (a > 0) {
        print(a);
    }
}
"""
    program = parse(source)
    trace = execute(program, EntryCall.of("main"))
    graph = build_dependencies(trace, program)
    enters = _enters(trace)
    assert graph.control_edges[enters[2]] == enters[1]  # print -> if


def test_trace_from_other_program_rejected():
    trace = execute(parse(STRAIGHT), EntryCall.of("main"))
    other = parse("fn main(){ print(1); }")
    with pytest.raises(TraceMismatch):
        build_dependencies(trace, other)


def test_edges_match_bruteforce_oracle_on_random_programs():
    checked = 0
    for seed in range(100):
        program = parse(random_program(seed))
        trace = execute(program, EntryCall.of("main"))
        enters = _enters(trace)
        if len(enters) > 200:
            continue
        graph = build_dependencies(trace, program)
        oracle = DependencyRecorder(program).run("main", ())
        translated = {}
        for ordinal, writers in oracle.items():
            if ordinal < len(enters):
                translated[enters[ordinal]] = {enters[w] for w in writers if w < len(enters)}
        assert {k: set(v) for k, v in graph.data_edges.items()} == translated, seed
        checked += 1
    assert checked >= 90


def test_slice_excludes_independent_statement():
    program = parse(STRAIGHT)
    trace = execute(program, EntryCall.of("main"))
    graph = build_dependencies(trace, program)
    enters = _enters(trace)
    criterion = SliceCriterion(enters[3], frozenset({"c"}))
    sliced = backward_slice(graph, criterion)
    lines = {graph.nodes[e].line for e in sliced}
    assert lines == {2, 4, 5}  # let a, let c, assert; not let b


def test_slice_of_literal_write_is_just_the_anchor():
    program = parse("fn main() {\n    let a = 1;\n}\n")
    trace = execute(program, EntryCall.of("main"))
    graph = build_dependencies(trace, program)
    criterion = SliceCriterion(_enters(trace)[0], frozenset())
    assert backward_slice(graph, criterion) == {_enters(trace)[0]}


def test_slice_contains_oracle_dependency_closure():
    """Soundness: the brute-force data closure is always inside the slice."""
    checked = 0
    for seed in range(100):
        program = parse(random_program(seed))
        trace = execute(program, EntryCall.of("main"))
        enters = _enters(trace)
        if not enters or len(enters) > 200:
            continue
        graph = build_dependencies(trace, program)
        oracle = DependencyRecorder(program).run("main", ())
        anchor_ordinal = len(enters) - 1
        closure = set()
        frontier = [anchor_ordinal]
        while frontier:
            node = frontier.pop()
            if node in closure:
                continue
            closure.add(node)
            frontier.extend(oracle.get(node, ()))
        sliced = backward_slice(graph, SliceCriterion(enters[anchor_ordinal], frozenset()))
        missing = {enters[o] for o in closure} - sliced
        assert not missing, (seed, missing)
        checked += 1
    assert checked >= 90


def test_slice_cap_drops_oldest_first():
    source = """fn main() {
    let s = 0;
    for i in 0..40 {
        s = s + i;
    }
    print(s);
}
"""
    program = parse(source)
    trace = execute(program, EntryCall.of("main"))
    graph = build_dependencies(trace, program)
    enters = _enters(trace)
    criterion = SliceCriterion(enters[-1], frozenset({"s"}))
    full = backward_slice(graph, criterion)
    capped = backward_slice(graph, criterion, max_slice_events=10)
    assert len(capped) == 10
    assert capped <= full
    assert min(capped) >= sorted(full, reverse=True)[9]  # newest kept


def test_criterion_tracks_reads_of_raising_statement():
    source = """fn mod2(a, b) {
    return a % b;
}

fn main() {
    print(mod2(5, 0));
}
"""
    snap = capture(source, EntryCall.of("main"))
    trace = execute(parse(source), EntryCall.of("main"))
    snap = snap.with_problem(derive_symptom(trace))
    criterion = criterion_from_problem(snap, trace)
    assert criterion.tracked_vars == frozenset({"a", "b"})
    assert criterion.include_control


def test_criterion_line_never_executed_rejected():
    source = "fn main() {\n    if (false) {\n        print(1);\n    }\n    print(2);\n}\n"
    snap = capture(source, EntryCall.of("main"), stop_rule=AtEvent(0))
    snap = snap.with_problem(LineShouldNotExecute("main", 3))
    trace = execute(parse(source), EntryCall.of("main"))
    with pytest.raises(SymptomNotInTrace):
        criterion_from_problem(snap, trace)


def test_criterion_variable_anchor_is_last_write_before_stop():
    source = """fn main() {
    let x = 1;
    x = 2;
    x = 3;
    print(x);
}
"""
    trace = execute(parse(source), EntryCall.of("main"))
    snap = capture(source, EntryCall.of("main"), stop_rule=AtEvent(len(trace.events) - 1))
    snap = snap.with_problem(VariableWrongValue("main", "x", 3, 7, True))
    criterion = criterion_from_problem(snap, trace)
    from patchsmith.interp import VarWrite

    writes = [e for e in trace.events if isinstance(e, VarWrite) and e.name == "x"]
    assert criterion.anchor_idx == writes[-1].idx
    assert criterion.tracked_vars == frozenset({"x"})


def test_variable_never_written_rejected():
    source = "fn main() {\n    let x = 1;\n    print(x);\n}\n"
    trace = execute(parse(source), EntryCall.of("main"))
    snap = capture(source, EntryCall.of("main"), stop_rule=AtEvent(0))
    snap = snap.with_problem(VariableWrongValue("main", "x", 1))
    with pytest.raises(SymptomNotInTrace):
        criterion_from_problem(snap, trace)


def test_raising_statement_scores_exactly_one():
    source = """fn main() {
    let b = 0;
    let c = 1 / b;
}
"""
    snap = capture(source, EntryCall.of("main"))
    trace = execute(parse(source), EntryCall.of("main"))
    snap = snap.with_problem(derive_symptom(trace))
    result = localize(snap, trace)
    top = result.locations[0]
    assert (top.function, top.line) == ("main", 3)
    assert top.suspiciousness == pytest.approx(1.0)


def test_scores_bounded_and_order_deterministic():
    for seed in (2, 8, 21):
        source = random_program(seed)
        program = parse(source)
        trace = execute(program, EntryCall.of("main"))
        enters = _enters(trace)
        if not enters:
            continue
        snap = capture(source, EntryCall.of("main"),
                       stop_rule=AtEvent(len(trace.events) - 1))
        graph = build_dependencies(trace, program)
        criterion = SliceCriterion(enters[-1], frozenset())
        sliced = backward_slice(graph, criterion)
        one = rank_locations(graph, criterion, sliced, trace, snap)
        two = rank_locations(graph, criterion, sliced, trace, snap)
        assert [(l.function, l.line, l.suspiciousness) for l in one] == \
               [(l.function, l.line, l.suspiciousness) for l in two]
        for loc in one:
            assert 0.0 < loc.suspiciousness <= 1.0


def test_anchor_location_always_present():
    for seed in (4, 14, 33):
        source = random_program(seed)
        program = parse(source)
        trace = execute(program, EntryCall.of("main"))
        enters = _enters(trace)
        if not enters:
            continue
        snap = capture(source, EntryCall.of("main"),
                       stop_rule=AtEvent(len(trace.events) - 1))
        graph = build_dependencies(trace, program)
        criterion = SliceCriterion(enters[-1], frozenset())
        sliced = backward_slice(graph, criterion)
        locations = rank_locations(graph, criterion, sliced, trace, snap)
        anchor = graph.nodes[enters[-1]]
        assert (anchor.function, anchor.line) in {(l.function, l.line) for l in locations}


def test_removing_foreign_event_never_raises_other_scores():
    source = random_program(12)
    program = parse(source)
    trace = execute(program, EntryCall.of("main"))
    enters = _enters(trace)
    snap = capture(source, EntryCall.of("main"), stop_rule=AtEvent(len(trace.events) - 1))
    graph = build_dependencies(trace, program)
    criterion = SliceCriterion(enters[-1], frozenset())
    sliced = backward_slice(graph, criterion)
    base = {(l.function, l.line): l.suspiciousness
            for l in rank_locations(graph, criterion, sliced, trace, snap)}
    anchor_evt = enters[-1]
    for removed in sorted(sliced):
        if removed == anchor_evt:
            continue
        removed_loc = (graph.nodes[removed].function, graph.nodes[removed].line)
        smaller = sliced - {removed}
        for loc in rank_locations(graph, criterion, smaller, trace, snap):
            if (loc.function, loc.line) != removed_loc:
                assert loc.suspiciousness <= base[(loc.function, loc.line)] + 1e-12
