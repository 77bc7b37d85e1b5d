"""
CSV writers for run artifacts.

Machine-facing traces use 17 significant digits; the human-facing summary
tables (selection grid, fit metrics, backtest summary) use 4 decimals.  Every
file is purely numeric so it reloads through pipeline.frames.load_csv.

Artifacts and what they chart:
- selection.csv: ranked (d, delta, beta) grid with log-likelihood, MSSE(1), MAE(1)
- bayes_factors.csv: H_t(1) of the fitted model against each rival order
- diagnostics.csv: one-step forecasts, errors and Q_t of a filter pass
- volatility.csv: one-step volatility forecasts and correlations
- metrics.csv: MSSE(h), MAE(h), ME(h) per horizon
- backtest_summary.csv: mean cumulative return (%) per strategy and cell
- returns.csv / weights_<strategy>.csv: realized, cumulative returns and weights
"""
import json
import logging
from pathlib import Path

import numpy as np
import pandas as pd

from dynamics.exceptions import ConfigurationError, DataError
from dynamics.filtering import PosteriorState
from dynamics.forecast import correlation_forecast, credible_bounds, vol_forecast_mean
from dynamics.model_core import ModelConfig

from .frames import FLOAT_FORMAT

logger = logging.getLogger(__name__)

SUMMARY_FORMAT = '%.4f'


def _write(frame, path, float_format=FLOAT_FORMAT):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=float_format)
    logger.info('wrote %s (%d rows)', path, len(frame))
    return path


def write_json(data, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + '\n', encoding='utf-8')
    logger.info('wrote %s', path)
    return path


def write_posterior_means(snapshots, labels, path):
    """t, m_<row>_<label> for every posterior snapshot."""
    columns = {'t': [state.t for state in snapshots]}
    dim = snapshots[0].m.shape[0]
    for row in range(dim):
        for j, label in enumerate(labels):
            columns[f'm_{row}_{label}'] = [state.m[row, j] for state in snapshots]
    return _write(pd.DataFrame(columns), path)


def write_state_spread(snapshots, path):
    """t, p_i_j for the upper triangle of P_t."""
    dim = snapshots[0].P.shape[0]
    rows, cols = np.triu_indices(dim)
    data = np.array([state.P[rows, cols] for state in snapshots])
    frame = pd.DataFrame(data, columns=[f'p_{i}_{j}' for i, j in zip(rows, cols)])
    frame.insert(0, 't', [state.t for state in snapshots])
    return _write(frame, path)


def write_diagnostics(diagnostics, labels, path):
    """t, Q, logpred, jitter, forecast_<label>, error_<label> per filter step."""
    columns = {
        't': [step.t for step in diagnostics],
        'Q': [step.Q for step in diagnostics],
        'logpred': [step.logpred for step in diagnostics],
        'jitter': [step.jitter for step in diagnostics],
    }
    for j, label in enumerate(labels):
        columns[f'forecast_{label}'] = [step.mean[j] for step in diagnostics]
        columns[f'error_{label}'] = [step.e[j] for step in diagnostics]
    return _write(pd.DataFrame(columns), path)


def write_volatility(states, config, labels, path):
    """
    One-step volatility forecast made at each t: standard deviations and,
    for p >= 2, pairwise correlations.
    """
    rows = []
    for state in states:
        volatility = vol_forecast_mean(state, config)
        row = {'t': state.t}
        row.update({f'vol_{label}': np.sqrt(volatility[j, j]) for j, label in enumerate(labels)})
        if config.p > 1:
            correlation = correlation_forecast(state, config)
            for i in range(config.p):
                for j in range(i + 1, config.p):
                    row[f'corr_{labels[i]}_{labels[j]}'] = correlation[i, j]
        rows.append(row)
    return _write(pd.DataFrame(rows), path)


def write_forecast_table(results, labels, level, path):
    """h, mean_<label>, variance_<label>, lower_<label>, upper_<label>."""
    rows = []
    for result in results:
        lower, upper = credible_bounds(result, level)
        row = {'h': result.h}
        for j, label in enumerate(labels):
            row[f'mean_{label}'] = result.mean[j]
            row[f'variance_{label}'] = result.covariance[j, j]
            row[f'lower_{label}'] = lower[j]
            row[f'upper_{label}'] = upper[j]
        rows.append(row)
    return _write(pd.DataFrame(rows), path)


def write_selection_table(cells, labels, path):
    """
    Ranked grid cells.  Failed cells are left out of the CSV and returned so
    the caller can report them.
    """
    rows = []
    failed = []
    for cell in cells:
        if cell.failed:
            failed.append({'d': cell.d, 'delta': cell.delta, 'beta': cell.beta, 'error': cell.error})
            continue
        row = {'rank': cell.rank, 'd': cell.d, 'delta': cell.delta, 'beta': cell.beta, 'loglik': cell.loglik}
        row.update({f'msse_{label}': cell.msse[j] for j, label in enumerate(labels)})
        row.update({f'mae_{label}': cell.mae[j] for j, label in enumerate(labels)})
        rows.append(row)
    _write(pd.DataFrame(rows), path, SUMMARY_FORMAT)
    return failed


def write_bayes_traces(rival_orders, traces, path):
    """Long table rival_d, t, H_t, logH_t, running_mean."""
    frames = [
        pd.DataFrame({
            'rival_d': order,
            't': trace.times,
            'H_t': trace.bayes_factors,
            'logH_t': trace.log_bayes_factors,
            'running_mean': trace.running_mean,
        })
        for order, trace in zip(rival_orders, traces)
    ]
    frame = pd.concat(frames, ignore_index=True) if frames else pd.DataFrame(
        columns=['rival_d', 't', 'H_t', 'logH_t', 'running_mean']
    )
    return _write(frame, path)


def write_metrics_table(metrics, labels, path):
    """h, msse_<label>, mae_<label>, me_<label>, count."""
    rows = []
    for item in metrics:
        row = {'h': item.h}
        for prefix in ('msse', 'mae', 'me'):
            values = getattr(item, prefix)
            row.update({f'{prefix}_{label}': values[j] for j, label in enumerate(labels)})
        row['count'] = item.count
        rows.append(row)
    return _write(pd.DataFrame(rows), path, SUMMARY_FORMAT)


def write_backtest_summary(rows, strategies, path):
    """d, delta, beta and the mean cumulative return (%) per strategy; failed rows are returned."""
    records = []
    failed = []
    for row in rows:
        config = row.config
        if row.error:
            failed.append({'label': config.label(), 'error': row.error})
            continue
        record = {'d': config.d, 'delta': float(config.delta[0]), 'beta': config.beta}
        record.update({name.upper(): row.summary[name] for name in strategies})
        record.update({f'failed_{name}': row.failed_steps[name] for name in strategies})
        records.append(record)
    _write(pd.DataFrame(records), path, SUMMARY_FORMAT)
    return failed


def write_backtest_paths(report, labels, directory):
    """returns.csv plus one weights_<strategy>.csv per strategy."""
    directory = Path(directory)
    columns = {'t': report.times}
    for name in report.strategies:
        columns[f'r_{name}'] = report.returns[name]
        columns[f'c_{name}'] = report.cumulative[name]
        columns[f'failed_{name}'] = report.failed[name].astype(int)
    paths = [_write(pd.DataFrame(columns), directory / 'returns.csv')]
    for name in report.strategies:
        frame = pd.DataFrame(report.weights[name], columns=list(labels))
        frame.insert(0, 't', report.times)
        paths.append(_write(frame, directory / f'weights_{name}.csv'))
    return paths


def write_truth(truth, labels, directory):
    """truth_phi.csv (t, phi_<row>_<label>) and truth_sigma.csv (t, sigma_i_j)."""
    directory = Path(directory)
    dim = truth.phi.shape[1]
    phi = pd.DataFrame(
        truth.phi.reshape(len(truth.times), -1),
        columns=[f'phi_{row}_{label}' for row in range(dim) for label in labels],
    )
    phi.insert(0, 't', truth.times)
    p = len(labels)
    rows, cols = np.triu_indices(p)
    sigma = pd.DataFrame(
        truth.sigma[:, rows, cols],
        columns=[f'sigma_{i}_{j}' for i, j in zip(rows, cols)],
    )
    sigma.insert(0, 't', truth.times)
    return _write(phi, directory / 'truth_phi.csv'), _write(sigma, directory / 'truth_sigma.csv')


def write_state(state, config, path):
    """Final posterior and its ModelConfig as JSON, for the forecast command."""
    return write_json({
        'config': config.to_dict(),
        't': state.t,
        'm': state.m.tolist(),
        'P': state.P.tolist(),
        'S': state.S.tolist(),
        'history': state.history.tolist(),
    }, path)


def load_state(path):
    """
    (PosteriorState, ModelConfig) written by write_state.

    Raises:
        DataError: unreadable or incomplete state file
    """
    try:
        data = json.loads(Path(path).read_text(encoding='utf-8'))
        config = ModelConfig(**data['config'])
        state = PosteriorState(
            t=int(data['t']),
            m=np.array(data['m'], dtype=float),
            P=np.array(data['P'], dtype=float),
            S=np.array(data['S'], dtype=float),
            history=np.array(data['history'], dtype=float),
        )
    except ConfigurationError:
        raise
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise DataError(f'cannot read posterior state {path}: {exc}') from exc
    if state.m.shape != (config.dim, config.p) or state.history.shape != (config.d, config.p):
        raise DataError(f'posterior state {path} does not match its model configuration')
    return state, config
