"""Exception types shared across the package."""


class DdidError(Exception):
    """Base class for package-specific errors."""


class CapacityError(DdidError):
    """An exhaustive routine was asked to enumerate past its safety caps."""


class UnsupportedFamilyError(DdidError, ValueError):
    """The requested algorithm does not handle this query family."""


class ConsistencyError(DdidError):
    """A solver's reported answer failed an independent cross-check."""


class BackendError(DdidError):
    """An external solving backend misbehaved or is missing its input."""


class SolveTimeout(DdidError):
    """The time limit expired before the solver proved optimality."""

    def __init__(self, message: str, elapsed: float | None = None):
        super().__init__(message)
        self.elapsed = elapsed


class ParseError(DdidError, ValueError):
    """Malformed model, solution, or instance text."""
