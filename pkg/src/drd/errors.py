"""Exception hierarchy shared by every module of the package."""


class DRDError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(DRDError):
    """A problem instance violates a structural or semantic requirement."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class ContradictoryEvidence(DRDError):
    """The observed test outcomes rule out every hypothesis."""


class DuplicateTest(DRDError):
    """A test was run twice within one evidence set."""


class InfeasiblePolicy(DRDError):
    """A policy ran out of informative tests before reaching its stop condition.

    ``trace`` holds the partial run when raised from a policy execution.
    """

    trace = None


class InternalInconsistency(DRDError):
    """A numerical or theoretical invariant was violated; indicates a bug."""


class LimitExceeded(DRDError):
    """An exhaustive oracle was asked to handle an instance beyond its size limits."""


class InstanceFormatError(DRDError):
    """An instance document could not be parsed or has the wrong schema."""
