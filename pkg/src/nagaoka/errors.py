"""Shared exception types."""


class ModelParseError(ValueError):
    """Model file is malformed and cannot be parsed."""


class ModelValidationError(ValueError):
    """A validity condition (A.1-A.4) is violated.

    ``condition`` carries the short code of the violated condition so
    callers and tests can match on it.
    """

    def __init__(self, condition, message):
        super().__init__(f"{condition} violated: {message}")
        self.condition = condition


class DimensionBudgetError(RuntimeError):
    """A requested matrix would exceed the dimension budget.

    The budget defaults to 200000 and can be overridden with the
    NAGAOKA_DIM_BUDGET environment variable.
    """


class ConvergenceError(RuntimeError):
    """An iterative solve did not reach the requested residual."""


class AmbiguousSpinError(RuntimeError):
    """Ground-state spin could not be resolved to a half-integer."""


class InconsistencyError(RuntimeError):
    """Certificate implication violated: sign structure and irreducibility
    hold but the ground state is not unique/strictly positive.  Indicates a
    solver failure and is never accepted silently."""
