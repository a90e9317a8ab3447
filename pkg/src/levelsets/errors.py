"""Exception hierarchy shared by the toolkit.

The CLI maps these onto exit codes: configuration problems exit with 1,
infeasible parameter choices with 2 and numeric budget failures with 3.
"""


class LevelSetError(Exception):
    """Base class for toolkit errors."""


class ConfigError(LevelSetError, ValueError):
    """Malformed or inconsistent experiment configuration."""

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key


class InfeasibleError(LevelSetError, ValueError):
    """A moment order or exponent window violates the feasibility inequality."""


class NumericError(LevelSetError, ArithmeticError):
    """A series or quadrature could not be completed within its budget."""


class DivergentSeriesError(NumericError):
    pass


class SeriesBudgetError(NumericError):
    pass
