"""
Conjugate filtering recursions for the TV-VAR model with stochastic volatility.

At time t-1 the posterior is

    Phi_{t-1} | Sigma_{t-1}, y^{t-1} ~ N(m_{t-1}, P_{t-1}, Sigma_{t-1})
    Sigma_{t-1} | y^{t-1}             ~ IW_p(n + 2p, S_{t-1})

Evolution discounts P by Delta and S by k; observing y_t gives

    Q_t = F_t' R_t F_t + 1        e_t = y_t - m_{t-1}' F_t      K_t = R_t F_t / Q_t
    m_t = m_{t-1} + K_t e_t'      P_t = R_t - R_t F_t F_t' R_t / Q_t
    S_t = k^{-1} S_{t-1} + e_t e_t' / Q_t

P_t is written in the form that satisfies P_t^{-1} = R_t^{-1} + F_t F_t'.
"""
import logging
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import linalg

from .distributions import mvt_logpdf
from .exceptions import DataError
from .linalg import jittered_cholesky, symmetrize
from .model_core import build_design

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FilterOptions:
    """
    Numerical and bookkeeping knobs of a filter run.

    - snapshot_every: keep every k-th posterior (1 = all, 0 = none)
    - q_warn_threshold: log a warning when Q_t exceeds this value
    - jitter_scale, max_jitter_escalations: see linalg.jittered_cholesky
    """

    snapshot_every: int = 1
    q_warn_threshold: float = 1e8
    jitter_scale: float = 1e-10
    max_jitter_escalations: int = 3


DEFAULT_OPTIONS = FilterOptions()


@dataclass(frozen=True, eq=False)
class PosteriorState:
    """
    Posterior at time t: location m, state spread P, volatility scale S and the
    last d observations (most recent first) needed for the next design vector.
    """

    t: int
    m: np.ndarray
    P: np.ndarray
    S: np.ndarray
    history: np.ndarray

    def volatility_mean(self, config):
        """E(Sigma_t | y^t) = S_t / (n - 2)."""
        return self.S / (config.n - 2.0)


@dataclass(frozen=True, eq=False)
class StepDiagnostics:
    """Quantities produced while absorbing y_t."""

    t: int
    mean: np.ndarray
    e: np.ndarray
    Q: float
    K: np.ndarray
    R: np.ndarray
    Qstar1: np.ndarray
    logpred: float
    jitter: float = 0.0


class FilterRun(NamedTuple):
    final: PosteriorState
    diagnostics: list
    snapshots: list


def series_values(series):
    """N x p float array from a SeriesFrame or array-like."""
    values = np.asarray(getattr(series, 'values', series), dtype=float)
    if values.ndim == 1:
        values = values.reshape(-1, 1)
    if values.ndim != 2:
        raise DataError(f'series must be N x p, got shape {values.shape}')
    return values


def initial_state(values, config, prior):
    """Posterior at t = d built from the prior and the first d observations."""
    if values.shape[1] != config.p:
        raise DataError(f'series has {values.shape[1]} columns but the model expects p={config.p}')
    if values.shape[0] < config.d + 1:
        raise DataError(
            f'series of length {values.shape[0]} is too short for d={config.d}; '
            f'need at least {config.d + 1} observations'
        )
    prior.validate(config)
    history = values[config.d - 1::-1].copy()
    return PosteriorState(
        t=config.d,
        m=np.array(prior.m, dtype=float),
        P=np.array(prior.P, dtype=float),
        S=np.array(prior.S, dtype=float),
        history=history,
    )


def evolve(state, config):
    """
    Prior spreads at t+1 given the posterior at t.

    Returns:
        tuple: (R = Delta^{-1/2} P Delta^{-1/2}, S_prior = k^{-1} S)
    """
    scale = 1.0 / np.sqrt(config.delta)
    R = state.P * np.outer(scale, scale)
    return R, state.S / config.k


def update(state, y, config, options=DEFAULT_OPTIONS):
    """
    Absorb the observation y_{t+1} into the posterior at t.

    The input state is not modified.

    Returns:
        tuple: (PosteriorState at t+1, StepDiagnostics)

    Raises:
        DataError: y has the wrong dimension
        NumericalBreakdown: P or S stays indefinite after jitter
    """
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if y.shape != (config.p,):
        raise DataError(f'observation must have dimension {config.p}, got shape {y.shape}')
    t = state.t + 1

    # Design vector and evolved spreads
    f = build_design(state.history, p=config.p, d=config.d)
    R, S_prior = evolve(state, config)

    # One-step forecast and gain
    Rf = R @ f
    Q = float(f @ Rf) + 1.0
    if Q > options.q_warn_threshold:
        logger.warning('Q_t = %.3g exceeds the warning threshold at t=%d', Q, t)

    mean = state.m.T @ f
    e = y - mean
    K = Rf / Q

    # Posterior moments
    m = state.m + np.outer(K, e)
    P = symmetrize(R - np.outer(Rf, Rf) / Q)
    S = symmetrize(S_prior + np.outer(e, e) / Q)

    # Restore positive definiteness
    P, _, jitter_p = jittered_cholesky(
        P, t=t, jitter_scale=options.jitter_scale,
        max_escalations=options.max_jitter_escalations, name='P',
    )
    S, _, jitter_s = jittered_cholesky(
        S, t=t, jitter_scale=options.jitter_scale,
        max_escalations=options.max_jitter_escalations, name='S',
    )

    # Predictive density of y
    Qstar1 = Q * S_prior
    logpred = mvt_logpdf(y, mean, Qstar1 / config.dof, config.dof)

    history = np.vstack([y[np.newaxis, :], state.history[:-1]])
    new_state = PosteriorState(t=t, m=m, P=P, S=S, history=history)
    diagnostics = StepDiagnostics(
        t=t, mean=mean, e=e, Q=Q, K=K, R=R, Qstar1=Qstar1,
        logpred=float(logpred), jitter=max(jitter_p, jitter_s),
    )
    return new_state, diagnostics


def iter_filter(series, config, prior, options=DEFAULT_OPTIONS):
    """
    Yield (posterior at t, diagnostics at t) for t = d+1..N.

    Errors raised by ``update`` propagate with their time index.
    """
    values = series_values(series)
    state = initial_state(values, config, prior)
    for y in values[config.d:]:
        state, diagnostics = update(state, y, config, options)
        yield state, diagnostics


def run_filter(series, config, prior, options=DEFAULT_OPTIONS):
    """
    Filter a whole series.

    Snapshots start with the prior state at t = d and then keep every
    ``options.snapshot_every``-th posterior (the final one is always kept when
    thinning is on).

    Returns:
        FilterRun: (final state, list of StepDiagnostics, list of PosteriorState)
    """
    values = series_values(series)
    state = initial_state(values, config, prior)
    every = options.snapshot_every
    snapshots = [state] if every else []
    diagnostics = []

    for state, step in iter_filter(values, config, prior, options):
        diagnostics.append(step)
        if every and (state.t - config.d) % every == 0:
            snapshots.append(state)

    if every and snapshots[-1] is not state:
        snapshots.append(state)

    logger.debug('filtered %d steps for %s', len(diagnostics), config.label())
    return FilterRun(final=state, diagnostics=diagnostics, snapshots=snapshots)


def spread_bound(series, config, prior):
    """
    Upper bound on max_t ||P_t^{-1}||_2 for a bounded series.

    ||P_d^{-1}|| + M * sum_j 1 / (1 - delta_j) with M = max_t ||F_t F_t'||_2;
    infinite when some delta_j = 1.
    """
    values = series_values(series)
    if np.any(config.delta >= 1.0):
        return np.inf
    largest = 0.0
    for row in range(config.d, values.shape[0]):
        f = build_design(values[row - config.d:row][::-1], p=config.p, d=config.d)
        largest = max(largest, float(f @ f))
    prior_term = 1.0 / linalg.eigvalsh(prior.P)[0]
    return prior_term + largest * float(np.sum(1.0 / (1.0 - config.delta)))
