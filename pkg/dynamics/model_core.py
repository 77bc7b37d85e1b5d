"""
TV-VAR model configuration, priors and the regression design vector.

The model is

    y_t' = F_t' Phi_t + eps_t',      eps_t ~ N_p(0, Sigma_t)
    Phi_t = Phi_{t-1} + Omega_t,     Omega_t ~ N_{(dp+1) x p}(0, W_t, Sigma_t)

with F_t = [1, y_{t-1}', ..., y_{t-d}']' and a discount-driven random walk on
Sigma_t^{-1}.  Observations are indexed t = 1..N and filtering starts at t = d+1.
"""
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .exceptions import ConfigurationError, DataError

BETA_LOWER = 2.0 / 3.0
HORIZON_DISCOUNTS = ('recursive', 'constant')


def derive_constants(p, beta):
    """
    Volatility constants n and k for dimension p and discount beta.

    n = 1 / (1 - beta)
    k = (beta (1 - p) + p) / (beta (2 - p) + p - 1)

    Raises:
        ConfigurationError: p < 1 or beta outside (2/3, 1)
    """
    if int(p) != p or p < 1:
        raise ConfigurationError(f'p must be a positive integer, got {p!r}')
    if not BETA_LOWER < beta < 1.0:
        raise ConfigurationError(
            f'beta must lie in (2/3, 1) so that multi-step covariances exist, got {beta!r}'
        )
    n = 1.0 / (1.0 - beta)
    k = (beta * (1 - p) + p) / (beta * (2 - p) + p - 1)
    return n, k


@dataclass(frozen=True, eq=False)
class ModelConfig:
    """
    Dimensions and discount factors of a TV-VAR(d) model.

    Fields:
    - p: series dimension
    - d: autoregressive order (>= 1)
    - delta: dp+1 state discount factors in (0, 1]; a scalar is expanded
    - beta: volatility discount factor in (2/3, 1)
    - horizon_discount: 'recursive' (R_t(h) = D^{-h/2} P D^{-h/2}) or
      'constant' (W_{t+i} fixed at the one-step value)
    """

    p: int
    d: int
    delta: np.ndarray
    beta: float
    horizon_discount: str = 'recursive'
    n: float = field(init=False)
    k: float = field(init=False)

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise ConfigurationError(f'd must be a positive integer, got {self.d!r}')
        n, k = derive_constants(self.p, self.beta)

        dim = int(self.d) * int(self.p) + 1
        delta = np.asarray(self.delta, dtype=float)
        if delta.ndim == 0:
            delta = np.full(dim, float(delta))
        if delta.shape != (dim,):
            raise ConfigurationError(
                f'delta must be a scalar or have d*p+1 = {dim} entries, got {delta.size}'
            )
        if np.any(delta <= 0.0) or np.any(delta > 1.0):
            raise ConfigurationError('every discount factor delta_j must lie in (0, 1]')
        if self.horizon_discount not in HORIZON_DISCOUNTS:
            raise ConfigurationError(
                f'horizon_discount must be one of {HORIZON_DISCOUNTS}, got {self.horizon_discount!r}'
            )

        delta.setflags(write=False)
        object.__setattr__(self, 'p', int(self.p))
        object.__setattr__(self, 'd', int(self.d))
        object.__setattr__(self, 'beta', float(self.beta))
        object.__setattr__(self, 'delta', delta)
        object.__setattr__(self, 'n', n)
        object.__setattr__(self, 'k', k)

    @property
    def dim(self):
        """Number of rows of the state matrix, d*p + 1."""
        return self.d * self.p + 1

    @property
    def dof(self):
        """Degrees of freedom beta*n of the one-step predictive."""
        return self.beta * self.n

    @property
    def discount_matrix(self):
        """Delta = diag(delta_1, ..., delta_{dp+1})."""
        return np.diag(self.delta)

    def label(self):
        """Short human-readable cell label, e.g. 'd=2 delta=0.98 beta=0.9'."""
        if np.all(self.delta == self.delta[0]):
            delta = f'{self.delta[0]:g}'
        else:
            delta = '[' + ','.join(f'{v:g}' for v in self.delta) + ']'
        return f'd={self.d} delta={delta} beta={self.beta:g}'

    def to_dict(self):
        return {
            'p': self.p,
            'd': self.d,
            'delta': self.delta.tolist(),
            'beta': self.beta,
            'horizon_discount': self.horizon_discount,
        }


@dataclass(frozen=True, eq=False)
class Prior:
    """
    Conjugate prior at t = d.

    Phi_d | Sigma_d ~ N_{(dp+1) x p}(m, P, Sigma_d) and Sigma_d^{-1} ~ W_p(n + 2p, S).
    """

    m: np.ndarray
    P: np.ndarray
    S: np.ndarray

    def validate(self, config):
        """
        Check shapes and positive definiteness against ``config``.

        Raises:
            ConfigurationError: wrong shape, asymmetric or not positive definite
        """
        dim, p = config.dim, config.p
        expected = {'m': (dim, p), 'P': (dim, dim), 'S': (p, p)}
        for name, shape in expected.items():
            value = getattr(self, name)
            if value.shape != shape:
                raise ConfigurationError(f'prior {name} must have shape {shape}, got {value.shape}')
        for name in ('P', 'S'):
            value = getattr(self, name)
            if not np.allclose(value, value.T, rtol=1e-10, atol=1e-12):
                raise ConfigurationError(f'prior {name} must be symmetric')
            try:
                linalg.cholesky(value, lower=True)
            except linalg.LinAlgError as exc:
                raise ConfigurationError(f'prior {name} must be positive definite') from exc
        return self


def default_prior(config, initial_belief=None, state_spread=1000.0, volatility_scale=1.0):
    """
    Weakly informative prior: m_d = initial belief (or zeros), P_d = 1000 I, S_d = I.

    Args:
        config (ModelConfig): model dimensions
        initial_belief (array, optional): (dp+1) x p prior location
        state_spread (float): multiple of the identity used for P_d
        volatility_scale (float): multiple of the identity used for S_d

    Returns:
        Prior
    """
    if initial_belief is None:
        m = np.zeros((config.dim, config.p))
    else:
        m = np.array(initial_belief, dtype=float)
    prior = Prior(
        m=m,
        P=state_spread * np.eye(config.dim),
        S=volatility_scale * np.eye(config.p),
    )
    return prior.validate(config)


def build_design(history, p=None, d=None):
    """
    Design vector F = [1, y_{t-1}', ..., y_{t-d}']'.

    Args:
        history: the last d observations, most recent first (d x p array or
            a sequence of p-vectors)
        p, d (int, optional): expected dimensions, checked when given

    Returns:
        ndarray: (dp+1,) vector whose first element is exactly 1

    Raises:
        DataError: dimension mismatch
    """
    lags = np.asarray(history, dtype=float)
    if lags.ndim == 1:
        lags = lags.reshape(-1, 1) if p == 1 else lags.reshape(1, -1)
    if lags.ndim != 2:
        raise DataError(f'history must be a d x p array, got shape {lags.shape}')
    if d is not None and lags.shape[0] != d:
        raise DataError(f'expected {d} lagged observations, got {lags.shape[0]}')
    if p is not None and lags.shape[1] != p:
        raise DataError(f'expected observations of dimension {p}, got {lags.shape[1]}')

    design = np.empty(lags.size + 1)
    design[0] = 1.0
    design[1:] = lags.ravel()
    return design
