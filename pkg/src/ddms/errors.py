"""Exception types shared across the package."""


class DomainError(ValueError):
    """Argument outside the mathematical domain of an operation."""


class SingularChain(ArithmeticError):
    """Extended chain has no well-conditioned unconditional distribution."""

    def __init__(self, rcond: float, threshold: float = 1e-9):
        self.rcond = rcond
        self.threshold = threshold
        super().__init__(f"reciprocal condition {rcond:.3e} below {threshold:.1e}")


class DegenerateLikelihood(ArithmeticError):
    """A one-step predictive density evaluated to zero (or not a number)."""


class DegenerateDifferences(ValueError):
    """Loss differential has zero variance; the comparison statistic is undefined."""


class EstimationFailed(RuntimeError):
    """All stored starting values failed the acceptance criteria."""

    def __init__(self, message: str, diagnostics=None):
        super().__init__(message)
        self.diagnostics = list(diagnostics or [])
