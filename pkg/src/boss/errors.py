"""Exception types shared across the package."""


class FactorizationError(RuntimeError):
    """A matrix factorization failed (non-PD or numerically singular)."""


class EvaluationError(RuntimeError):
    """A density evaluation returned a non-finite value.

    Carries the offending point in ``.point``.
    """

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class ConvergenceError(RuntimeError):
    """An iterative solver failed to converge within its budget."""


class CurvatureError(RuntimeError):
    """A Hessian that must be positive definite is not."""


class DegenerateDensityError(RuntimeError):
    """All density evaluations underflowed to zero mass."""


class SupportMismatchError(ValueError):
    """One density places mass where the reference density has none."""


class BudgetAccountingError(RuntimeError):
    """Recorded evaluation counts disagree with the configured budget."""
