"""Exception hierarchy shared by the library and the command line runner.

The CLI maps these onto exit codes: configuration and hypothesis problems
exit with 2, numerical failures with 3, failed certifications with 1.
"""


class WorkbenchError(Exception):
    """Base class for all errors raised by this package."""


class SpecificationError(WorkbenchError, ValueError):
    """A problem description or configuration is malformed."""


class HypothesisViolation(WorkbenchError, ValueError):
    """Input is well formed but violates a structural assumption."""

    def __init__(self, hypothesis, message):
        super().__init__(f"{hypothesis}: {message}")
        self.hypothesis = hypothesis


class DomainError(WorkbenchError, ValueError):
    """An argument lies outside the domain of a function."""


class NumericError(WorkbenchError, RuntimeError):
    """An iteration failed to converge or produced non-finite values."""

    def __init__(self, where, message, trace=None):
        super().__init__(f"{where}: {message}")
        self.where = where
        self.trace = list(trace) if trace is not None else []


class CertificationFailure(WorkbenchError):
    """A computed object failed one of its certified properties."""

    def __init__(self, what, record=None):
        super().__init__(what)
        self.record = record or {}
