"""Exception hierarchy shared across modules."""


class PhononDecouplingError(Exception):
    pass


class DomainError(PhononDecouplingError, ValueError):
    """Argument outside the mathematical domain of a function."""


class NumericalError(PhononDecouplingError, RuntimeError):
    """A quadrature, iteration or extrapolation failed to converge.

    ``diagnostics`` carries whatever history helps to debug the failure.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics if diagnostics is not None else {}


class ResourceError(PhononDecouplingError, MemoryError):
    pass


class UsageError(PhononDecouplingError, ValueError):
    pass


class ValidationError(PhononDecouplingError, ValueError):
    """Configuration problems; ``problems`` lists every violation found."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))
