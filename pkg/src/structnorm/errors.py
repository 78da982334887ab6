"""Exception types shared across the package."""


class ModelError(ValueError):
    """Invalid model description or argument (bad dimension, divisibility, degenerate input)."""


class BudgetError(RuntimeError):
    """An exhaustive enumeration would exceed its step budget."""


class NumericError(ArithmeticError):
    """Non-finite input reached a numerical routine."""
