"""Exception types shared across the package."""


class DomainError(ValueError):
    """Input outside the domain of an operation (zero polynomial, bad controller, ...)."""


class ConvergenceError(RuntimeError):
    """Iterative method hit its cap; carries the best iterate and its residual."""

    def __init__(self, message, best=None, residual=None):
        super().__init__(message)
        self.best = best
        self.residual = residual


class NonsmoothPointError(DomainError):
    """Gradient requested where the abscissa is not differentiable."""
