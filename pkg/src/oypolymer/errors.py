class DomainError(ValueError):
    """Argument outside the mathematical domain of an operation."""


class ConvergenceError(RuntimeError):
    """Iterative solver stopped without meeting its tolerance."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class BudgetError(MemoryError):
    """A configured memory or compute budget would be exceeded."""


class TruncationError(RuntimeError):
    """Neglected tail mass of a truncated integral exceeds its budget."""

    def __init__(self, message, bound=None):
        super().__init__(message)
        self.bound = bound
