"""patchsmith: snapshot-driven automated program repair for MiniLang.

The pipeline: capture a failing run as a DebugSnapshot, localize suspicious
statements by dynamic backward slicing over the trace, generate candidate
patches (templates, pattern strategies, sibling co-change, iterative
multi-location search), validate each candidate by re-simulating and
comparing traces against the declared problem, and present a small ranked
list the developer can preview and accept.
"""

from .edits import Edit, EditTarget, Patch, Relationship, apply_patch
from .exceptions import PatchsmithError
from .faultloc import (
    DependencyGraph,
    RepairLocation,
    SliceCriterion,
    backward_slice,
    build_dependencies,
    criterion_from_problem,
    localize,
    rank_locations,
)
from .genglobal import (
    SearchConfig,
    iterative_repair,
    pattern_patches,
    run_all_generators,
    sibling_locations,
    simultaneous_repair,
)
from .genlocal import RepairContext, generate_local
from .interp import EntryCall, ExecutionTrace, RuntimeLimits, execute, state_at
from .minilang import parse, pretty_print
from .prompt import PromptDocument, build_prompt, parse_generator_reply
from .session import EngineConfig, RepairService
from .snapshot import (
    AtEvent,
    AtLineOccurrence,
    AtRaise,
    DebugSnapshot,
    LineShouldNotExecute,
    UnexpectedException,
    VariableWrongValue,
    capture,
    derive_symptom,
    load_snapshot,
    save_snapshot,
)
from .validate import (
    RankedPatchList,
    ValidationResult,
    rank,
    symptom_resolved,
    trace_similarity,
    validate,
)

__version__ = "0.1.0"

__all__ = [
    "Edit", "EditTarget", "Patch", "Relationship", "apply_patch",
    "PatchsmithError",
    "DependencyGraph", "RepairLocation", "SliceCriterion", "backward_slice",
    "build_dependencies", "criterion_from_problem", "localize", "rank_locations",
    "SearchConfig", "iterative_repair", "pattern_patches", "run_all_generators",
    "sibling_locations", "simultaneous_repair",
    "RepairContext", "generate_local",
    "EntryCall", "ExecutionTrace", "RuntimeLimits", "execute", "state_at",
    "parse", "pretty_print",
    "PromptDocument", "build_prompt", "parse_generator_reply",
    "EngineConfig", "RepairService",
    "AtEvent", "AtLineOccurrence", "AtRaise", "DebugSnapshot",
    "LineShouldNotExecute", "UnexpectedException", "VariableWrongValue",
    "capture", "derive_symptom", "load_snapshot", "save_snapshot",
    "RankedPatchList", "ValidationResult", "rank", "symptom_resolved",
    "trace_similarity", "validate",
    "__version__",
]
