"""Internal consistency of every bundled corpus fixture."""

import pytest

from patchsmith.edits import apply_patch_detailed
from patchsmith.minilang import parse, pretty_print
from patchsmith.snapshot import verify_consistency
from patchsmith.validate import symptom_resolved, validate

from corpus_helpers import buggy_program, buggy_trace
from patchsmith import corpus

ALL = corpus.all_bugs()
RELATIONSHIPS = {"DU", "OA", "RIF", "DIF", "EOH", "SU", "ONPF", "FU"}


def test_corpus_composition():
    assert len(corpus.single_edit_bugs()) >= 20
    multi = corpus.relationship_bugs()
    assert len(multi) >= 8
    assert {b.category for b in multi} == RELATIONSHIPS


@pytest.mark.parametrize("bug", ALL, ids=lambda b: b.name)
def test_sources_are_canonical(bug):
    assert pretty_print(parse(bug.buggy_source)) == bug.buggy_source
    assert pretty_print(parse(bug.fixed_source)) == bug.fixed_source


@pytest.mark.parametrize("bug", ALL, ids=lambda b: b.name)
def test_buggy_run_shows_the_symptom(bug):
    assert not symptom_resolved(bug.problem, buggy_trace(bug))


@pytest.mark.parametrize("bug", ALL, ids=lambda b: b.name)
def test_ground_truth_turns_buggy_into_fixed(bug):
    applied = apply_patch_detailed(buggy_program(bug), bug.ground_truth)
    assert applied.source == bug.fixed_source


@pytest.mark.parametrize("bug", ALL, ids=lambda b: b.name)
def test_ground_truth_resolves_and_completes(bug):
    result = validate(corpus.snapshot_for(bug), bug.ground_truth,
                      original_trace=buggy_trace(bug), program=buggy_program(bug))
    assert result.resolved
    assert result.clean_completion


@pytest.mark.parametrize("bug", ALL, ids=lambda b: b.name)
def test_snapshots_reproduce_on_reexecution(bug):
    verify_consistency(corpus.snapshot_for(bug))


def test_relationship_ground_truths_tagged():
    for bug in corpus.relationship_bugs():
        if len(bug.ground_truth.edits) > 1:
            assert bug.ground_truth.relationship is not None
            assert bug.ground_truth.relationship.value == bug.category


def test_problem_kinds_cover_all_three_forms():
    from patchsmith.snapshot import (
        LineShouldNotExecute,
        UnexpectedException,
        VariableWrongValue,
    )

    kinds = {type(b.problem) for b in ALL}
    assert kinds == {UnexpectedException, LineShouldNotExecute, VariableWrongValue}
