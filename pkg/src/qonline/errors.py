"""Exception types raised across the package."""


class QOnlineError(Exception):
    """Base class for all package errors."""


class ValidationError(QOnlineError, ValueError):
    """An input violates a type invariant or precondition."""


class DomainError(QOnlineError, ValueError):
    """A spectral function was evaluated outside its domain."""


class CapacityError(QOnlineError):
    """A construction would exceed the configured dimension cap."""


class ContractError(QOnlineError):
    """An update was called with arguments breaking its contract."""


class ConsistencyError(QOnlineError):
    """An internal numerical consistency check failed."""


class ConvergenceError(QOnlineError):
    """An iterative routine hit its iteration limit."""


class DegeneratePostselectionError(QOnlineError):
    """Postselection on an event of (numerically) zero probability."""
