"""
Exception hierarchy shared by the dynamics, portfolio and pipeline apps.

Management commands map these onto exit codes:
- ConfigurationError -> 1 (usage/configuration)
- DataError -> 2
- NumericalBreakdown, InfeasibleAllocation -> 3
"""


class TVVARError(Exception):
    """Base class for every error raised by this project."""


class ConfigurationError(TVVARError, ValueError):
    """A model, prior, horizon or run parameter is outside its domain."""


class DataError(TVVARError, ValueError):
    """Malformed or insufficient input data."""

    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column


class NumericalBreakdown(TVVARError, ArithmeticError):
    """A factorization or log-evaluation failed at time index ``t``."""

    def __init__(self, message, t=None):
        if t is not None:
            message = f'{message} (t={t})'
        super().__init__(message)
        self.t = t


class InfeasibleAllocation(TVVARError, ArithmeticError):
    """The portfolio constraints cannot be met for this forecast."""


class SimulationDiverged(NumericalBreakdown):
    """A simulated trajectory crossed the explosion guard."""

    def __init__(self, message, t=None, seed=None):
        if seed is not None:
            message = f'{message} [seed={seed}]'
        super().__init__(message, t=t)
        self.seed = seed
