"""
Labelled multivariate series, CSV input/output and price-to-return transforms.
"""
import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd

from dynamics.exceptions import ConfigurationError, DataError

logger = logging.getLogger(__name__)

TRANSFORMS = ('none', 'geometric_returns', 'log_returns')
TIME_COLUMN_NAMES = ('t', 'time', 'date', 'timestamp')
FLOAT_FORMAT = '%.17g'


def _ordering_key(times):
    times = np.asarray(times)
    if np.issubdtype(times.dtype, np.number):
        return times.astype(float)
    try:
        return pd.to_datetime(pd.Series(times)).to_numpy()
    except (ValueError, TypeError) as exc:
        raise DataError(f'time column cannot be ordered: {exc}') from exc


@dataclass(frozen=True, eq=False)
class SeriesFrame:
    """
    N x p observations with column labels, ordered times and provenance.

    - labels: p column names
    - times: N strictly increasing time stamps or integer indices
    - values: N x p floats, no missing cells
    - transform: 'none', 'geometric_returns' or 'log_returns'
    - time_column: header of the time column in CSV form
    """

    labels: list
    times: np.ndarray
    values: np.ndarray
    transform: str = 'none'
    time_column: str = 't'

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim == 1:
            values = values.reshape(-1, 1)
        if values.ndim != 2:
            raise DataError(f'values must be N x p, got shape {values.shape}')
        times = np.asarray(self.times)
        if times.shape != (values.shape[0],):
            raise DataError(f'{times.size} time stamps for {values.shape[0]} rows')
        if len(self.labels) != values.shape[1]:
            raise DataError(f'{len(self.labels)} labels for {values.shape[1]} columns')
        if self.transform not in TRANSFORMS:
            raise ConfigurationError(f'transform must be one of {TRANSFORMS}, got {self.transform!r}')

        missing = np.argwhere(~np.isfinite(values))
        if missing.size:
            row, column = missing[0]
            raise DataError(
                f'missing or non-finite value at row {row + 1}, column {self.labels[column]!r}',
                row=int(row + 1), column=self.labels[column],
            )
        steps = np.diff(_ordering_key(times))
        if steps.size and not np.all(steps > steps.dtype.type(0)):
            row = int(np.argmax(~(steps > steps.dtype.type(0)))) + 2
            raise DataError(f'times are not strictly increasing at row {row}', row=row)

        values.setflags(write=False)
        object.__setattr__(self, 'labels', [str(label) for label in self.labels])
        object.__setattr__(self, 'times', times)
        object.__setattr__(self, 'values', values)

    @classmethod
    def from_array(cls, values, labels=None, transform='none'):
        """Frame with integer times 1..N and labels y1..yp by default."""
        values = np.asarray(values, dtype=float)
        if values.ndim == 1:
            values = values.reshape(-1, 1)
        labels = labels or [f'y{i + 1}' for i in range(values.shape[1])]
        return cls(labels=labels, times=np.arange(1, values.shape[0] + 1), values=values, transform=transform)

    @property
    def n_obs(self):
        return self.values.shape[0]

    @property
    def p(self):
        return self.values.shape[1]

    def to_dataframe(self):
        frame = pd.DataFrame(self.values, columns=self.labels)
        frame.insert(0, self.time_column, self.times)
        return frame


def load_csv(path, time_column=None, transform='none'):
    """
    Read a SeriesFrame from a CSV with a header row.

    Args:
        path: CSV file
        time_column (str, optional): header of the time column; by default a
            first column named t, time, date or timestamp is used, otherwise
            rows are numbered 1..N
        transform (str): provenance tag of the values

    Raises:
        DataError: unreadable file, ragged rows, missing or non-numeric cells,
            non-monotone times
    """
    try:
        raw = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    except FileNotFoundError as exc:
        raise DataError(f'no such file: {path}') from exc
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as exc:
        raise DataError(f'cannot parse {path}: {exc}') from exc

    if raw.empty or raw.shape[1] == 0:
        raise DataError(f'{path} has no data rows')

    if time_column is None and str(raw.columns[0]).strip().lower() in TIME_COLUMN_NAMES:
        time_column = raw.columns[0]
    if time_column is not None and time_column not in raw.columns:
        raise DataError(f'{path} has no time column {time_column!r}')

    labels = [column for column in raw.columns if column != time_column]
    if not labels:
        raise DataError(f'{path} has no value columns')
    for label in labels:
        cells = raw[label].str.strip()
        blank = cells.isna() | (cells == '')
        if blank.any():
            row = int(np.argmax(blank.to_numpy())) + 1
            raise DataError(f'{path}: empty cell at row {row}, column {label!r}', row=row, column=label)
        numeric = pd.to_numeric(cells, errors='coerce')
        if numeric.isna().any():
            row = int(np.argmax(numeric.isna().to_numpy())) + 1
            raise DataError(
                f'{path}: non-numeric value {cells.iloc[row - 1]!r} at row {row}, column {label!r}',
                row=row, column=label,
            )

    # parse again so floats keep their exact round-trip values
    parsed = pd.read_csv(path, float_precision='round_trip', skipinitialspace=True)
    values = parsed[labels].to_numpy(dtype=float)

    if time_column is None:
        times = np.arange(1, values.shape[0] + 1)
        time_column = 't'
    else:
        times = parsed[time_column].to_numpy()

    frame = SeriesFrame(
        labels=labels,
        times=times,
        values=values,
        transform=transform,
        time_column=str(time_column),
    )
    logger.debug('loaded %s: N=%d, p=%d', path, frame.n_obs, frame.p)
    return frame


def write_csv(frame, path):
    """Write ``frame`` with 17 significant digits, time column first."""
    frame.to_dataframe().to_csv(path, index=False, float_format=FLOAT_FORMAT)
    return path


def to_returns(frame, kind='geometric'):
    """
    Returns from a price frame.

    geometric: y_t = x_t / x_{t-1} - 1
    log:       y_t = log x_t - log x_{t-1}

    Raises:
        ConfigurationError: unknown kind, or the frame already holds returns
        DataError: zero prices (geometric) or non-positive prices (log)
    """
    if frame.transform != 'none':
        raise ConfigurationError(f'frame already holds {frame.transform}')
    if frame.n_obs < 2:
        raise DataError('returns need at least two prices')
    prices = frame.values

    if kind == 'geometric':
        zero = np.argwhere(prices[:-1] == 0.0)
        if zero.size:
            row, column = zero[0]
            raise DataError(
                f'zero price at row {row + 1}, column {frame.labels[column]!r}',
                row=int(row + 1), column=frame.labels[column],
            )
        values = prices[1:] / prices[:-1] - 1.0
        transform = 'geometric_returns'
    elif kind == 'log':
        bad = np.argwhere(prices <= 0.0)
        if bad.size:
            row, column = bad[0]
            raise DataError(
                f'non-positive price at row {row + 1}, column {frame.labels[column]!r}',
                row=int(row + 1), column=frame.labels[column],
            )
        values = np.diff(np.log(prices), axis=0)
        transform = 'log_returns'
    else:
        raise ConfigurationError(f"returns kind must be 'geometric' or 'log', got {kind!r}")

    return SeriesFrame(
        labels=list(frame.labels),
        times=frame.times[1:],
        values=values,
        transform=transform,
        time_column=frame.time_column,
    )
