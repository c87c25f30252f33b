"""Exception hierarchy shared by all modules."""


class SkelocutError(Exception):
    """Base class for every error raised by the package."""


class InputError(SkelocutError):
    """Problem with user-supplied input (CLI exit code 2)."""


class VerificationError(SkelocutError):
    """An internal verification step failed (CLI exit code 3)."""


class NonPlanarFace(InputError):
    pass


class NonConvex(InputError):
    pass


class BadTopology(InputError):
    pass


class DegenerateInput(InputError):
    pass


class NonConvexPolygon(InputError):
    pass


class TangentPlane(SkelocutError):
    pass


class ParseError(InputError):
    """Malformed text input; ``offset`` is a byte offset or a line number."""

    def __init__(self, message, offset=None):
        super().__init__(message if offset is None else f"{message} (at {offset})")
        self.offset = offset


class SearchBudgetExceeded(SkelocutError):
    pass


class AmbiguousStarUnfolding(SkelocutError):
    pass


class InterferenceViolation(SkelocutError):
    pass


class RootNotBracketed(SkelocutError):
    pass


class SelectionFailure(SkelocutError):
    pass


class UnsupportedPattern(SkelocutError):
    pass


class RealizationFailure(SkelocutError):
    """Raised by the realizer after parameter retries are exhausted."""

    def __init__(self, message, step=None, trace=None):
        super().__init__(message)
        self.step = step
        self.trace = trace


class WitnessNotFound(SkelocutError):
    pass
