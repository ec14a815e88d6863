"""Exception hierarchy shared by all wpa modules."""


class WPAError(Exception):
    """Base class for library errors."""


class DomainError(WPAError, ValueError):
    """Argument outside the domain of an operation (e.g. t <= 0 for the kernel)."""


class NonConvergenceError(WPAError, ArithmeticError):
    """A numerical procedure did not reach its tolerance.

    ``estimate`` and ``error`` carry the best value found and its error bound.
    """

    def __init__(self, message, estimate=None, error=None):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


class UnsupportedVariantError(WPAError, TypeError):
    """Operation is not defined for this wave-packet variant."""


class NotApplicableError(WPAError, ValueError):
    """The operation's assumptions do not hold for this state."""


class DegenerateInputError(WPAError, ValueError):
    def __init__(self, message, indices=()):
        super().__init__(message)
        self.indices = list(indices)


class InsufficientSpanError(WPAError, ValueError):
    pass


class PreconditionError(WPAError, ValueError):
    pass
