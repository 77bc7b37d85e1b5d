"""
Multi-step forecasts of the series and of the volatility, and the
MSSE / MAE / ME goodness-of-fit measures.

For a posterior at time t the h-step forecast is approximated by

    y_{t+h} | y^t ~ t_p(beta n, m_t' F_{t+h}, (F_{t+h}' R_t(h) F_{t+h} + 1) k^{-1} S_t)

where F_{t+h} plugs the forecast means y_t(j) in for unobserved lags.  The
scale Q*_t(h) and the covariance Q_t(h) = Q*_t(h) (1 - beta) / (3 beta - 2)
are both reported.  For h = 1 the result is exact.
"""
import logging
from dataclasses import dataclass
from itertools import chain

import numpy as np

from .distributions import t_quantile
from .exceptions import ConfigurationError, DataError, NumericalBreakdown
from .filtering import DEFAULT_OPTIONS, initial_state, iter_filter, series_values
from .linalg import inverse_sqrt
from .model_core import build_design

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ForecastResult:
    """
    h-step forecast from a posterior at time ``origin``.

    - mean: y_t(h)
    - scale: Q*_t(h), the Student t scale of the forecast error
    - covariance: Q_t(h) = scale / (beta n - 2)
    - dof: beta n
    - vol_forecast: S_t(h) = E(Sigma_{t+h} | y^t)
    - design: the plug-in design vector F_{t+h}
    - spread: R_t(h)
    """

    origin: int
    h: int
    mean: np.ndarray
    scale: np.ndarray
    covariance: np.ndarray
    dof: float
    vol_forecast: np.ndarray
    design: np.ndarray
    spread: np.ndarray

    @property
    def standard_scale(self):
        """Scale matrix A of the t_p(dof, mean, A) density, Q* / (beta n)."""
        return self.scale / self.dof


@dataclass(frozen=True, eq=False)
class FitMetrics:
    """Averages of h-step errors over t = d..N-h."""

    h: int
    msse: np.ndarray
    mae: np.ndarray
    me: np.ndarray
    count: int


def _volatility_ratio(config):
    # (1 - beta) / (3 beta - 2) == 1 / (beta n - 2)
    return (1.0 - config.beta) / (3.0 * config.beta - 2.0)


def horizon_spread(P, config, h):
    """
    R_t(h) = P_t + sum_{i=1}^h W_{t+i}.

    'recursive': R_t(h) = Delta^{-h/2} P_t Delta^{-h/2}
    'constant':  W_{t+i} = Delta^{-1/2} P_t Delta^{-1/2} - P_t for every i
    """
    if config.horizon_discount == 'recursive':
        scale = config.delta ** (-0.5 * h)
        return P * np.outer(scale, scale)
    scale = config.delta ** -0.5
    return P + h * (P * np.outer(scale, scale) - P)


def forecast_path(state, config, horizon):
    """
    Forecasts for every h = 1..horizon from one posterior.

    Returns:
        list of ForecastResult, index h-1
    """
    if int(horizon) != horizon or horizon < 1:
        raise ConfigurationError(f'forecast horizon must be a positive integer, got {horizon!r}')

    S_prior = state.S / config.k
    vol_forecast = _volatility_ratio(config) * S_prior
    lags = np.array(state.history, dtype=float)
    results = []

    for h in range(1, int(horizon) + 1):
        design = build_design(lags, p=config.p, d=config.d)
        mean = state.m.T @ design
        spread = horizon_spread(state.P, config, h)
        bracket = float(design @ spread @ design) + 1.0
        results.append(ForecastResult(
            origin=state.t,
            h=h,
            mean=mean,
            scale=bracket * S_prior,
            covariance=bracket * vol_forecast,
            dof=config.dof,
            vol_forecast=vol_forecast,
            design=design,
            spread=spread,
        ))
        # the newest lag is the forecast just made
        lags = np.vstack([mean[np.newaxis, :], lags[:-1]])

    return results


def forecast(state, config, h):
    """h-step ForecastResult from the posterior ``state``."""
    return forecast_path(state, config, h)[-1]


def vol_forecast_mean(state, config):
    """S_t(h) = (1 - beta) k^{-1} / (3 beta - 2) S_t, the same for every h."""
    return _volatility_ratio(config) * state.S / config.k


def correlation_forecast(state, config):
    """
    Correlation matrix implied by the volatility forecast.

    Raises:
        ConfigurationError: p < 2
        NumericalBreakdown: a non-positive variance on the diagonal
    """
    if config.p < 2:
        raise ConfigurationError('correlation forecasts need p >= 2')
    volatility = vol_forecast_mean(state, config)
    variances = np.diag(volatility)
    if np.any(variances <= 0.0):
        raise NumericalBreakdown('volatility forecast has a non-positive variance', t=state.t)
    sd = np.sqrt(variances)
    correlation = np.clip(volatility / np.outer(sd, sd), -1.0, 1.0)
    np.fill_diagonal(correlation, 1.0)
    return correlation


def credible_bounds(result, level):
    """
    Componentwise equal-tailed credible bounds for y_{t+h}.

    mean -/+ q sqrt(diag(Q*) / (beta n)) with q the (1 + level)/2 quantile of
    the standard t with beta n degrees of freedom.

    Returns:
        tuple: (lower, upper) p-vectors
    """
    if not 0.0 < level < 1.0:
        raise ConfigurationError(f'credible level must lie in (0, 1), got {level!r}')
    if result.dof <= 2.0:
        raise ConfigurationError('credible bounds need beta n > 2')
    half_width = t_quantile(level, result.dof) * np.sqrt(np.diag(result.scale) / result.dof)
    return result.mean - half_width, result.mean + half_width


class _ErrorAccumulator:
    def __init__(self, h, p):
        self.h = h
        self.sq_standardized = np.zeros(p)
        self.abs_error = np.zeros(p)
        self.error = np.zeros(p)
        self.count = 0

    def add(self, result, observed):
        e, _, v = standardized_errors(result, observed)
        self.sq_standardized += v * v
        self.abs_error += np.abs(e)
        self.error += e
        self.count += 1

    def finish(self):
        return FitMetrics(
            h=self.h,
            msse=self.sq_standardized / self.count,
            mae=self.abs_error / self.count,
            me=self.error / self.count,
            count=self.count,
        )


def standardized_errors(result, observed):
    """
    Forecast error e_t(h) with its two standardizations.

    Returns:
        tuple: (e, u = Q*^{-1/2} e, v = Q^{-1/2} e)
    """
    e = np.asarray(observed, dtype=float) - result.mean
    u = inverse_sqrt(result.scale, t=result.origin, name='Q*_t(h)') @ e
    v = inverse_sqrt(result.covariance, t=result.origin, name='Q_t(h)') @ e
    return e, u, v


def metrics_table(series, config, prior, horizons, options=DEFAULT_OPTIONS):
    """
    MSSE(h), MAE(h) and ME(h) for several horizons from a single filter pass.

    Each horizon averages over t = d..N-h; the t = d term forecasts from the
    prior.

    Returns:
        list of FitMetrics in ascending h

    Raises:
        DataError: N < d + max(h) + 1
    """
    horizons = sorted({int(h) for h in horizons})
    if not horizons or horizons[0] < 1:
        raise ConfigurationError('horizons must be positive integers')
    values = series_values(series)
    n_obs = values.shape[0]
    if n_obs < config.d + horizons[-1] + 1:
        raise DataError(
            f'{n_obs} observations are not enough for d={config.d} and h={horizons[-1]}'
        )

    start = initial_state(values, config, prior)
    states = chain([start], (state for state, _ in iter_filter(values, config, prior, options)))
    metrics = metrics_from_states(states, values, config, horizons)
    logger.info(
        '%s: MSSE(%d) = %s', config.label(), metrics[0].h,
        np.array2string(metrics[0].msse, precision=3),
    )
    return metrics


def metrics_from_states(states, values, config, horizons):
    """
    FitMetrics from an already computed posterior sequence.

    ``states`` must run contiguously from t = d (the prior state); forecasting
    stops once no horizon fits inside the data.
    """
    horizons = sorted({int(h) for h in horizons})
    n_obs = values.shape[0]
    accumulators = {h: _ErrorAccumulator(h, config.p) for h in horizons}

    for state in states:
        remaining = n_obs - state.t
        if remaining < horizons[0]:
            break
        path = forecast_path(state, config, min(horizons[-1], remaining))
        for h in horizons:
            if h <= remaining:
                # y_{t+h} sits at row t+h-1
                accumulators[h].add(path[h - 1], values[state.t + h - 1])

    return [accumulators[h].finish() for h in horizons]


def rolling_metrics(series, config, prior, h, options=DEFAULT_OPTIONS):
    """FitMetrics for a single horizon h."""
    return metrics_table(series, config, prior, [h], options)[0]
