"""
Exception hierarchy for the toolkit.

Each class carries the process exit code the command line reports for it.
"""

from typing import Optional


class EntropyError(Exception):
    """Base class for all toolkit errors."""

    exit_code = 1


class SchemaError(EntropyError):
    """A document failed validation."""

    exit_code = 2

    def __init__(self, message: str, path: Optional[str] = None):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class PreconditionError(EntropyError):
    """An operation was called outside its domain."""

    exit_code = 3


class WindowExceedsDepth(PreconditionError):
    pass


class UncertifiedTail(PreconditionError):
    pass


class HorizonTooSmall(PreconditionError):
    pass


class NotOneStep(PreconditionError):
    pass


class ResolutionTooCoarse(PreconditionError):
    pass


class KExceedsDepth(PreconditionError):
    pass


class InadmissibleWord(PreconditionError):
    pass


class InadmissibleInput(PreconditionError):
    pass


class DepthMismatch(PreconditionError):
    pass


class ZeroMass(PreconditionError):
    pass


class NotMixing(PreconditionError):
    pass


class ZeroEntropyAmbient(PreconditionError):
    pass


class SourceCapacityExceeded(PreconditionError):
    pass


class NonConvergence(PreconditionError):
    """The point source ran dry before a stage could be completed."""


class BudgetExceeded(PreconditionError):
    """A construction would exceed the configured point budget."""


class TargetOutOfRange(PreconditionError):
    pass


class SourceUnavailable(PreconditionError):
    pass


class NotSurjective(PreconditionError):
    pass


class HypothesisViolated(PreconditionError):
    pass


class VerificationFailed(EntropyError):
    """A verified inequality or identity did not hold."""

    exit_code = 4
