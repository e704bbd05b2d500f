"""Exception taxonomy for the repair engine.

MiniLang *runtime* failures are never raised as Python exceptions; they are
recorded as Raise events / trace outcomes.  Everything here is an engine-level
error: bad input, broken invariants, exhausted budgets.
"""


class PatchsmithError(Exception):
    """Base class for all engine errors."""


# --- static language errors -------------------------------------------------

class SourceError(PatchsmithError):
    """A problem in MiniLang source text, carrying a 1-based line."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line
        self.message = message


class MiniLangSyntaxError(SourceError):
    pass


class MiniLangNameError(SourceError):
    def __init__(self, line: int, identifier: str, message: str | None = None):
        super().__init__(line, message or f"unresolved identifier '{identifier}'")
        self.identifier = identifier


class ArityError(SourceError):
    def __init__(self, line: int, callee: str, expected: int, got: int):
        super().__init__(
            line, f"call to '{callee}' expects {expected} argument(s), got {got}"
        )
        self.callee = callee
        self.expected = expected
        self.got = got


class UnknownFunction(PatchsmithError):
    pass


# --- traces and snapshots ----------------------------------------------------

class IndexOutOfRange(PatchsmithError):
    pass


class StopNotReached(PatchsmithError):
    pass


class NoFailure(PatchsmithError):
    pass


class SchemaError(PatchsmithError):
    pass


class SnapshotIoError(PatchsmithError):
    pass


class SnapshotInconsistent(PatchsmithError):
    pass


# --- fault localization -------------------------------------------------------

class TraceMismatch(PatchsmithError):
    pass


class SymptomNotInTrace(PatchsmithError):
    pass


# --- patch generation ----------------------------------------------------------

class NoCandidates(PatchsmithError):
    pass


class TransplantFailed(PatchsmithError):
    pass


class BudgetExhausted(PatchsmithError):
    pass


# --- patch application / validation ---------------------------------------------

class ApplyError(PatchsmithError):
    pass


class TargetNotFound(ApplyError):
    pass


class ConflictingEdits(ApplyError):
    pass


# --- session service -------------------------------------------------------------

class NoLocations(PatchsmithError):
    pass


class UnknownSession(PatchsmithError):
    pass


class UnknownPatch(PatchsmithError):
    pass


class AlreadyAccepted(PatchsmithError):
    pass
