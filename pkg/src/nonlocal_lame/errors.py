"""Exception hierarchy shared by all modules."""


class NonlocalError(Exception):
    """Base class for every error raised by the package."""


class DomainError(NonlocalError, ValueError):
    """An argument lies outside the domain of a mathematical function."""


class ConfigError(NonlocalError, ValueError):
    """Invalid construction parameters or run configuration."""


class UsageError(NonlocalError, ValueError):
    """An operation was called on inputs that violate its preconditions."""


class NumericalError(NonlocalError, ArithmeticError):
    """A numerical procedure failed to converge or produced an invalid value.

    ``payload`` carries whatever diagnostic data the failing routine had
    (refinement traces, offending multi-index, ...).
    """

    def __init__(self, message, payload=None):
        super().__init__(message)
        self.payload = payload if payload is not None else {}


class SolverError(NumericalError):
    """A per-mode linear solve could not be carried out."""
