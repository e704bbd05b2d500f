"""Repair sessions: orchestration, persistence, and the developer loop.

One directory per session under data_dir, holding the snapshot, the original
trace, results and the accepted source as plain files.  All JSON is written
with a fixed layout so a reload followed by a save is byte-identical.

Sessions are single-writer: a per-session lock serializes requests, while
validation inside one repair run fans out over the worker pool.
"""

from __future__ import annotations

import json
import os
import threading
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

from .edits import Patch, patch_from_json, patch_to_json
from .exceptions import (
    AlreadyAccepted,
    ApplyError,
    NoLocations,
    PatchsmithError,
    SchemaError,
    SymptomNotInTrace,
    UnknownPatch,
    UnknownSession,
)
from .faultloc import localize
from .genglobal import SearchConfig, run_all_generators
from .interp import ExecutionTrace, RuntimeLimits, execute, serialize_trace
from .minilang import parse, pretty_print
from .snapshot import (
    DebugSnapshot,
    ProblemSpec,
    problem_from_json,
    problem_to_json,
    snapshot_from_json,
    snapshot_to_json,
    validate_problem,
    verify_consistency,
)
from .validate import RankedPatchList, ValidationResult, rank, validate

STATUS_NEW = "New"
STATUS_LOCALIZED = "Localized"
STATUS_REPAIRING = "Repairing"
STATUS_DONE = "Done"
STATUS_FAILED = "Failed"


@dataclass
class EngineConfig:
    limits: RuntimeLimits = field(default_factory=RuntimeLimits)
    search: SearchConfig = field(default_factory=SearchConfig)
    top_k: int = 5
    worker_count: int = field(default_factory=lambda: os.cpu_count() or 4)
    data_dir: str = "patchsmith-sessions"

    def to_json(self) -> dict:
        return {
            "limits": {"step_budget": self.limits.step_budget,
                       "max_trace_events": self.limits.max_trace_events,
                       "max_call_depth": self.limits.max_call_depth},
            "search": {"beam_width": self.search.beam_width,
                       "max_depth": self.search.max_depth,
                       "per_round_candidates": self.search.per_round_candidates,
                       "total_validation_budget": self.search.total_validation_budget},
            "top_k": self.top_k,
            "worker_count": self.worker_count,
            "data_dir": self.data_dir,
        }

    @staticmethod
    def from_json(rec: dict) -> "EngineConfig":
        limits = rec.get("limits", {})
        search = rec.get("search", {})
        return EngineConfig(
            RuntimeLimits(limits.get("step_budget", 100_000),
                          limits.get("max_trace_events", 500_000),
                          limits.get("max_call_depth", 256)),
            SearchConfig(search.get("beam_width", 5), search.get("max_depth", 3),
                         search.get("per_round_candidates", 200),
                         search.get("total_validation_budget", 2000)),
            rec.get("top_k", 5),
            rec.get("worker_count", os.cpu_count() or 4),
            rec.get("data_dir", "patchsmith-sessions"),
        )


@dataclass
class RepairSession:
    session_id: str
    snapshot: DebugSnapshot
    original_trace: ExecutionTrace
    status: str = STATUS_NEW
    ranked: RankedPatchList | None = None
    accepted: str | None = None  # patch id
    history: list[tuple[ProblemSpec, RankedPatchList]] = field(default_factory=list)
    error: str = ""


def _ranked_to_json(ranked: RankedPatchList) -> dict:
    entries = []
    for i, (patch, result) in enumerate(ranked.entries):
        entries.append({
            "patch_id": f"p{i}",
            "patch": patch_to_json(patch),
            "validation": asdict(result),
        })
    return {"k": ranked.k, "entries": entries}


def _ranked_from_json(rec: dict) -> RankedPatchList:
    entries = []
    for item in rec["entries"]:
        v = item["validation"]
        entries.append((
            patch_from_json(item["patch"]),
            ValidationResult(v["resolved"], v["clean_completion"], v["output_match"],
                             v["similarity"], v["size_penalty"], v["score"],
                             v.get("patched_outcome", "")),
        ))
    return RankedPatchList(entries, rec.get("k", 5))


class RepairService:
    """Owns every session; safe to share across request handler threads."""

    def __init__(self, config: EngineConfig | None = None):
        self.config = config or EngineConfig()
        self.sessions: dict[str, RepairSession] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._registry_lock = threading.Lock()
        os.makedirs(self.config.data_dir, exist_ok=True)
        self._load_existing()

    # -- basic plumbing -----------------------------------------------------

    def _lock(self, session_id: str) -> threading.Lock:
        with self._registry_lock:
            return self._locks.setdefault(session_id, threading.Lock())

    def _dir(self, session_id: str) -> str:
        return os.path.join(self.config.data_dir, session_id)

    def _session(self, session_id: str) -> RepairSession:
        session = self.sessions.get(session_id)
        if session is None:
            raise UnknownSession(f"no session {session_id!r}")
        return session

    def _load_existing(self) -> None:
        root = self.config.data_dir
        for name in sorted(os.listdir(root)):
            meta_path = os.path.join(root, name, "session.json")
            snap_path = os.path.join(root, name, "snapshot.json")
            if not (os.path.isfile(meta_path) and os.path.isfile(snap_path)):
                continue
            try:
                with open(meta_path, encoding="utf-8") as fh:
                    meta = json.load(fh)
                with open(snap_path, encoding="utf-8") as fh:
                    snapshot = snapshot_from_json(json.load(fh))
                trace = execute(snapshot.program(), snapshot.entry, snapshot.limits)
                session = RepairSession(
                    session_id=meta["session_id"],
                    snapshot=snapshot,
                    original_trace=trace,
                    status=meta.get("status", STATUS_NEW),
                    accepted=meta.get("accepted"),
                    error=meta.get("error", ""),
                )
                if meta.get("ranked"):
                    session.ranked = _ranked_from_json(meta["ranked"])
                for item in meta.get("history", []):
                    session.history.append((
                        problem_from_json(item["problem"]),
                        _ranked_from_json(item["ranked"]),
                    ))
                if session.status == STATUS_REPAIRING:
                    session.status = STATUS_FAILED
                    session.error = "interrupted repair run"
                self.sessions[session.session_id] = session
            except (OSError, KeyError, ValueError, SchemaError, PatchsmithError):
                continue  # skip unreadable session dirs

    def _persist(self, session: RepairSession) -> None:
        path = self._dir(session.session_id)
        os.makedirs(path, exist_ok=True)
        with open(os.path.join(path, "snapshot.json"), "w", encoding="utf-8") as fh:
            json.dump(snapshot_to_json(session.snapshot), fh, indent=2)
            fh.write("\n")
        meta = {
            "session_id": session.session_id,
            "status": session.status,
            "accepted": session.accepted,
            "error": session.error,
            "ranked": _ranked_to_json(session.ranked) if session.ranked else None,
            "history": [
                {"problem": problem_to_json(problem), "ranked": _ranked_to_json(ranked)}
                for problem, ranked in session.history
            ],
        }
        with open(os.path.join(path, "session.json"), "w", encoding="utf-8") as fh:
            json.dump(meta, fh, indent=2)
            fh.write("\n")
        with open(os.path.join(path, "trace.jsonl"), "w", encoding="utf-8") as fh:
            fh.write(serialize_trace(session.original_trace))
        with open(os.path.join(path, "config.json"), "w", encoding="utf-8") as fh:
            json.dump(self.config.to_json(), fh, indent=2)
            fh.write("\n")

    # -- the developer loop ---------------------------------------------------

    def create_session(self, snapshot: DebugSnapshot) -> RepairSession:
        """Verify the snapshot against a fresh run and register it."""
        trace = verify_consistency(snapshot)  # SnapshotInconsistent on mismatch
        session_id = uuid.uuid4().hex[:12]
        session = RepairSession(session_id, snapshot, trace)
        self.sessions[session_id] = session
        self._persist(session)
        return session

    def set_problem(self, session_id: str, problem: ProblemSpec) -> RepairSession:
        session = self._session(session_id)
        with self._lock(session_id):
            validate_problem(problem, session.snapshot.program())
            session.snapshot = session.snapshot.with_problem(problem)
            # a refinement after Done keeps the session Done until the next
            # repair run moves it back to Repairing
            self._persist(session)
        return session

    def run_repair(self, session_id: str) -> RankedPatchList:
        session = self._session(session_id)
        with self._lock(session_id):
            if session.snapshot.problem is None:
                raise NoLocations("session has no problem specification")
            session.status = STATUS_REPAIRING
            session.error = ""
            try:
                ranked = self._repair(session)
            except NoLocations:
                session.status = STATUS_FAILED
                session.error = "no repair locations for this problem"
                self._persist(session)
                raise
            except PatchsmithError as exc:
                session.status = STATUS_FAILED
                session.error = str(exc)
                self._persist(session)
                raise
            session.ranked = ranked
            session.accepted = None
            session.status = STATUS_DONE
            session.history.append((session.snapshot.problem, ranked))
            self._persist(session)
            return ranked

    def _repair(self, session: RepairSession) -> RankedPatchList:
        snapshot = session.snapshot
        program = snapshot.program()
        trace = session.original_trace
        try:
            loc_result = localize(snapshot, trace, program)
        except SymptomNotInTrace as exc:
            raise NoLocations(str(exc)) from exc
        if not loc_result.locations:
            raise NoLocations("the backward slice is empty")
        session.status = STATUS_LOCALIZED

        run = run_all_generators(snapshot, trace, self.config.search, program)

        def check(patch: Patch) -> tuple[Patch, ValidationResult] | None:
            try:
                return patch, validate(snapshot, patch, original_trace=trace,
                                        program=program)
            except ApplyError:
                return None

        workers = max(1, self.config.worker_count)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            checked = list(pool.map(check, run.patches))
        results = [item for item in checked if item is not None]
        return rank(results, self.config.top_k)

    def start_repair(self, session_id: str) -> None:
        """Kick off run_repair on a worker thread (the HTTP 202 path)."""
        session = self._session(session_id)
        if session.snapshot.problem is None:
            raise NoLocations("session has no problem specification")
        session.status = STATUS_REPAIRING

        def worker() -> None:
            try:
                self.run_repair(session_id)
            except PatchsmithError:
                pass  # status/error already recorded

        threading.Thread(target=worker, name=f"repair-{session_id}", daemon=True).start()

    # -- results ---------------------------------------------------------------

    def ranked_entries(self, session_id: str) -> list[dict]:
        session = self._session(session_id)
        if session.ranked is None:
            return []
        return _ranked_to_json(session.ranked)["entries"]

    def _entry(self, session: RepairSession, patch_id: str) -> tuple[Patch, ValidationResult]:
        if session.ranked is not None:
            for i, (patch, result) in enumerate(session.ranked.entries):
                if f"p{i}" == patch_id:
                    return patch, result
        raise UnknownPatch(f"no patch {patch_id!r} in session {session.session_id}")

    def preview(self, session_id: str, patch_id: str) -> str:
        """Unified diff between the original and patched sources."""
        import difflib

        from .edits import apply_patch_detailed

        session = self._session(session_id)
        patch, _ = self._entry(session, patch_id)
        program = session.snapshot.program()
        applied = apply_patch_detailed(program, patch)
        original = pretty_print(program)
        diff = difflib.unified_diff(
            original.splitlines(keepends=True),
            applied.source.splitlines(keepends=True),
            fromfile="a/program.ml0",
            tofile="b/program.ml0",
            n=3,
        )
        return "".join(diff)

    def accept(self, session_id: str, patch_id: str) -> str:
        """Apply and persist the chosen patch; returns the patched source."""
        from .edits import apply_patch_detailed

        session = self._session(session_id)
        with self._lock(session_id):
            if session.accepted is not None:
                raise AlreadyAccepted(
                    f"session {session_id} already accepted {session.accepted}"
                )
            patch, _ = self._entry(session, patch_id)
            applied = apply_patch_detailed(session.snapshot.program(), patch)
            session.accepted = patch_id
            self._persist(session)
            with open(os.path.join(self._dir(session_id), "accepted.ml0"),
                      "w", encoding="utf-8") as fh:
                fh.write(applied.source)
            return applied.source

    # -- views -------------------------------------------------------------------

    def summary(self, session_id: str) -> dict:
        from .values import to_json as value_to_json

        session = self._session(session_id)
        snapshot = session.snapshot
        return {
            "session_id": session.session_id,
            "status": session.status,
            "error": session.error,
            "entry": {"function": snapshot.entry.function,
                      "args": [value_to_json(a) for a in snapshot.entry.args]},
            "stop_idx": snapshot.stop_idx,
            "outcome": session.original_trace.outcome.kind,
            "program_source": snapshot.program_source,
            "stack": [
                {"frame": f.frame_id, "function": f.function, "line": f.current_line,
                 "bindings": {k: value_to_json(v) for k, v in f.bindings.items()}}
                for f in snapshot.stack
            ],
            "problem": problem_to_json(snapshot.problem) if snapshot.problem else None,
            "accepted": session.accepted,
            "patch_count": len(session.ranked.entries) if session.ranked else 0,
            "history_rounds": len(session.history),
        }

    def trace_page(self, session_id: str, start: int = 0, count: int = 100) -> dict:
        from .interp import _event_record

        session = self._session(session_id)
        events = session.original_trace.events
        start = max(0, start)
        page = events[start: start + max(0, count)]
        return {
            "from": start,
            "total": len(events),
            "outcome": session.original_trace.outcome.kind,
            "step_count": session.original_trace.step_count,
            "events": [_event_record(e) for e in page],
        }
