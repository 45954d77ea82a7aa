"""Exception types shared across the package."""


class ShapeError(ValueError):
    """An array argument has the wrong shape or length."""


class DomainError(ValueError):
    """A scalar argument lies outside the operation's domain."""


class BudgetError(ValueError):
    """An exhaustive enumeration would exceed its support budget."""


class ConfigError(ValueError):
    """An experiment configuration failed to parse or validate."""


class NumericalError(RuntimeError):
    """Integration produced a non-finite state.

    time holds the first grid time at which the state was non-finite,
    when known.
    """

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class InfeasibleError(RuntimeError):
    """The residual constraint cannot be met by any vector.

    min_residual holds the least-squares residual, the smallest value the
    noise radius would have to reach for the constraint set to be nonempty.
    """

    def __init__(self, message, min_residual):
        super().__init__(message)
        self.min_residual = float(min_residual)


class InfeasibleCertificate(ValueError):
    """A certificate with feasible=False was used where a feasible one is
    required.  reasons carries the violated conditions."""

    def __init__(self, message, reasons=()):
        super().__init__(message)
        self.reasons = tuple(reasons)
