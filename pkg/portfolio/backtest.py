"""
Sequential backtest of the allocation rules on the model's one-step forecasts.

At every t = d+2..N the posterior at t-1 gives f_t = y_{t-1}(1) and the
forecast covariance Q_t = Q_{t-1}(1); each strategy picks a_t, the realized
return is r_t = a_t' y_t and returns are cumulated additively (or compounded).
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from dynamics.exceptions import ConfigurationError, DataError, InfeasibleAllocation, TVVARError
from dynamics.filtering import DEFAULT_OPTIONS, iter_filter, series_values
from dynamics.forecast import forecast
from dynamics.model_core import default_prior

from .allocation import AllocationInput, allocate, normalize_strategies

logger = logging.getLogger(__name__)

DEFAULT_TARGET = 0.001


@dataclass(frozen=True, eq=False)
class BacktestReport:
    """
    Per-step weights, realized and cumulative returns for each strategy.

    Row i of every array belongs to times[i].  ``failed[s][i]`` marks steps
    where strategy s could not allocate and held nothing.
    """

    label: str
    times: np.ndarray
    strategies: tuple
    weights: dict
    returns: dict
    cumulative: dict
    failed: dict
    target: float
    compound: bool
    metadata: dict = field(default_factory=dict)

    @property
    def summary(self):
        """Mean cumulative return (%) per strategy."""
        return {name: 100.0 * float(np.mean(self.cumulative[name])) for name in self.strategies}

    @property
    def failed_steps(self):
        return {name: int(np.sum(self.failed[name])) for name in self.strategies}


def cumulate(returns, compound=False):
    """c_t = sum_{s<=t} r_s, or prod_{s<=t}(1 + r_s) - 1 when compounding."""
    if compound:
        return np.cumprod(1.0 + returns) - 1.0
    return np.cumsum(returns)


def backtest(series, config, prior=None, target=DEFAULT_TARGET, strategies=('up', 'cp', 'ewp'),
             compound=False, options=DEFAULT_OPTIONS):
    """
    Backtest the allocation rules along a single filter pass.

    Process:
    1. Filter the series; after absorbing y_{t-1} forecast one step ahead
    2. Hand (f_t, Q_t, target) to every strategy
    3. Score the weights against the realized y_t

    Args:
        series: SeriesFrame or N x p array of returns
        config (ModelConfig): model used for the forecasts
        prior (Prior, optional): default_prior(config) when omitted
        target (float): per-period target expected return m
        strategies: names out of 'up', 'cp', 'ewp'
        compound (bool): compound instead of summing the returns

    Returns:
        BacktestReport

    Raises:
        DataError: N < d + 2
        ConfigurationError: invalid target or strategy
    """
    values = series_values(series)
    names = normalize_strategies(strategies)
    if not np.isfinite(target):
        raise ConfigurationError(f'target return must be finite, got {target!r}')
    if 'ewp' in names and config.p < 2:
        raise ConfigurationError('the equal weight portfolio needs p >= 2 assets')
    n_obs = values.shape[0]
    if n_obs < config.d + 2:
        raise DataError(f'a backtest needs at least d + 2 = {config.d + 2} observations, got {n_obs}')
    prior = prior if prior is not None else default_prior(config)

    times = []
    weights = {name: [] for name in names}
    failed = {name: [] for name in names}

    for state, _ in iter_filter(values, config, prior, options):
        if state.t >= n_obs:
            break
        # One-step forecast from the posterior at t-1
        one_step = forecast(state, config, 1)
        allocation = AllocationInput(f=one_step.mean, Q=one_step.covariance, m=target)
        t = state.t + 1
        times.append(t)
        # Allocate; an infeasible step holds zero weights
        for name in names:
            try:
                weights[name].append(allocate(name, allocation))
                failed[name].append(False)
            except InfeasibleAllocation as exc:
                logger.warning('%s allocation failed at t=%d: %s', name.upper(), t, exc)
                weights[name].append(np.zeros(config.p))
                failed[name].append(True)

    # Realized returns of each strategy
    times = np.array(times, dtype=int)
    realized = values[times - 1]
    weights = {name: np.array(rows) for name, rows in weights.items()}
    returns = {name: np.einsum('ij,ij->i', weights[name], realized) for name in names}
    report = BacktestReport(
        label=config.label(),
        times=times,
        strategies=names,
        weights=weights,
        returns=returns,
        cumulative={name: cumulate(returns[name], compound) for name in names},
        failed={name: np.array(flags, dtype=bool) for name, flags in failed.items()},
        target=float(target),
        compound=bool(compound),
        metadata={
            'first_step': int(config.d + 2),
            'cumulation': 'compound' if compound else 'additive',
            'covariance': 'Q_{t-1}(1)',
            'failed_step_policy': 'zero weights',
        },
    )
    logger.info(
        '%s: mean cumulative return %s', report.label,
        ', '.join(f'{name.upper()}={value:.4f}%' for name, value in report.summary.items()),
    )
    return report


@dataclass(eq=False)
class BacktestRow:
    """One configuration of a backtest grid."""

    config: object
    summary: dict = field(default_factory=dict)
    failed_steps: dict = field(default_factory=dict)
    error: str = ''


def backtest_grid(series, configs, target=DEFAULT_TARGET, strategies=('up', 'cp', 'ewp'),
                  priors=None, compound=False, jobs=1, options=DEFAULT_OPTIONS):
    """
    Mean cumulative return (%) of each strategy for every configuration.

    A configuration whose filter breaks down is kept with its error message.

    Args:
        priors: optional callable config -> Prior
        jobs (int): worker threads; rows keep the order of ``configs``

    Returns:
        list of BacktestRow
    """
    values = series_values(series)
    names = normalize_strategies(strategies)
    make_prior = priors or default_prior

    def run(config):
        row = BacktestRow(config=config)
        try:
            report = backtest(values, config, make_prior(config), target, names, compound, options)
        except TVVARError as exc:
            logger.warning('backtest for %s failed: %s', config.label(), exc)
            row.error = str(exc) or exc.__class__.__name__
            return row
        row.summary = report.summary
        row.failed_steps = report.failed_steps
        return row

    configs = list(configs)
    if jobs and jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(run, configs))
    return [run(config) for config in configs]
