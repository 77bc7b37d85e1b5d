"""
One-period mean-variance allocation rules.

Given the one-step forecast mean f and covariance Q of the returns:

- UP (unconstrained portfolio): minimise a'Qa subject to a'f = m
- CP (constrained portfolio): minimise a'Qa subject to a'f = m and a'1 = 1
- EWP (equal weight portfolio): a = 1/p

Every solve goes through a Cholesky factorization of Q.
"""
import logging
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from dynamics.exceptions import ConfigurationError, InfeasibleAllocation, NumericalBreakdown

logger = logging.getLogger(__name__)

STRATEGIES = ('up', 'cp', 'ewp')

# relative tolerances on f'Q^{-1}f and on the Cauchy-Schwarz gap of CP
UP_TOLERANCE = 1e-14
CP_TOLERANCE = 1e-12


@dataclass(frozen=True, eq=False)
class AllocationInput:
    """
    Inputs of one allocation step.

    - f: one-step forecast mean of the returns
    - Q: one-step forecast covariance (symmetric positive definite)
    - m: per-period target expected return
    """

    f: np.ndarray
    Q: np.ndarray
    m: float

    def __post_init__(self):
        f = np.atleast_1d(np.asarray(self.f, dtype=float))
        Q = np.atleast_2d(np.asarray(self.Q, dtype=float))
        if f.ndim != 1 or Q.shape != (f.size, f.size):
            raise ConfigurationError(f'Q must be {f.size} x {f.size} to match f')
        if not np.isfinite(self.m):
            raise ConfigurationError(f'target return must be finite, got {self.m!r}')
        object.__setattr__(self, 'f', f)
        object.__setattr__(self, 'Q', Q)
        object.__setattr__(self, 'm', float(self.m))

    @property
    def p(self):
        return self.f.size

    def factor(self):
        """cho_factor of Q."""
        try:
            return linalg.cho_factor(self.Q, lower=True)
        except linalg.LinAlgError as exc:
            raise NumericalBreakdown('forecast covariance Q is not positive definite') from exc


def allocate_up(allocation):
    """
    Minimum-variance weights hitting the target return.

        a = m Q^{-1} f / (f' Q^{-1} f)

    Raises:
        InfeasibleAllocation: f'Q^{-1}f is numerically zero (e.g. f = 0)
    """
    f = allocation.f
    solved = linalg.cho_solve(allocation.factor(), f)
    denominator = float(f @ solved)
    scale = float(np.max(np.diag(allocation.Q)))
    if not denominator > UP_TOLERANCE * float(f @ f) / scale:
        raise InfeasibleAllocation(
            f"target return cannot be reached: f'Q^-1 f = {denominator:.3g}"
        )
    return allocation.m * solved / denominator


def allocate_cp(allocation):
    """
    Minimum-variance fully invested weights hitting the target return.

    With A = 1'Q^{-1}1, B = 1'Q^{-1}f and C = f'Q^{-1}f the Lagrange
    conditions give

        a = Q^{-1} [(m A - B) f + (C - m B) 1] / (A C - B^2)

    Raises:
        InfeasibleAllocation: f is (numerically) proportional to 1
    """
    f = allocation.f
    ones = np.ones_like(f)
    factor = allocation.factor()
    q_ones = linalg.cho_solve(factor, ones)
    q_f = linalg.cho_solve(factor, f)

    A = float(ones @ q_ones)
    B = float(ones @ q_f)
    C = float(f @ q_f)
    denominator = A * C - B * B
    if not denominator > CP_TOLERANCE * A * C:
        raise InfeasibleAllocation(
            'target-return and budget constraints are degenerate '
            f'(f is proportional to 1; A C - B^2 = {denominator:.3g})'
        )
    m = allocation.m
    return ((m * A - B) * q_f + (C - m * B) * q_ones) / denominator


def allocate_ewp(p):
    """Equal weights 1/p for p >= 2 assets."""
    if int(p) != p or p < 2:
        raise ConfigurationError(f'the equal weight portfolio needs p >= 2 assets, got {p!r}')
    return np.full(int(p), 1.0 / p)


def allocate(strategy, allocation):
    """Weights of ``strategy`` ('up', 'cp' or 'ewp') for one step."""
    if strategy == 'up':
        return allocate_up(allocation)
    if strategy == 'cp':
        return allocate_cp(allocation)
    if strategy == 'ewp':
        return allocate_ewp(allocation.p)
    raise ConfigurationError(f'unknown strategy {strategy!r}; choose from {STRATEGIES}')


def normalize_strategies(strategies):
    """
    Validated strategy names in canonical order.

    Accepts an iterable of names or a comma-separated string.
    """
    if isinstance(strategies, str):
        strategies = strategies.split(',')
    names = {str(name).strip().lower() for name in strategies if str(name).strip()}
    unknown = names - set(STRATEGIES)
    if unknown:
        raise ConfigurationError(f'unknown strategies {sorted(unknown)}; choose from {STRATEGIES}')
    if not names:
        raise ConfigurationError('at least one strategy is required')
    return tuple(name for name in STRATEGIES if name in names)
