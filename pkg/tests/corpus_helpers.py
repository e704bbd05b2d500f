"""Shared helpers for corpus-driven tests."""

from __future__ import annotations

from patchsmith import corpus
from patchsmith.edits import apply_patch_detailed
from patchsmith.exceptions import ApplyError
from patchsmith.interp import EntryCall, execute
from patchsmith.minilang import parse


def buggy_program(bug: corpus.CorpusBug):
    return parse(bug.buggy_source)


def buggy_trace(bug: corpus.CorpusBug):
    return execute(buggy_program(bug), bug.entry, bug.limits)


def produces_fixed_source(program, patch, fixed_source: str) -> bool:
    """Does applying `patch` yield exactly the bug's fixed text?"""
    try:
        return apply_patch_detailed(program, patch).source == fixed_source
    except ApplyError:
        return False
