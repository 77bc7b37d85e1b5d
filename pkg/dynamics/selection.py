"""
Model comparison: sequential Bayes factors, the evaluated log-likelihood and
order/discount selection over a grid of candidate configurations.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg
from scipy.special import multigammaln

from .exceptions import ConfigurationError, NumericalBreakdown, TVVARError
from .filtering import DEFAULT_OPTIONS, FilterOptions, iter_filter, run_filter, series_values
from .forecast import metrics_from_states
from .linalg import symmetrize
from .model_core import ModelConfig, build_design, default_prior

logger = logging.getLogger(__name__)

EIGENVALUE_THRESHOLD = 1e-10
ROUNDOFF_FACTOR = 16.0


@dataclass(frozen=True, eq=False)
class ComparisonTrace:
    """
    Sequential Bayes factors H_t(1) of model A against model B.

    times[i] is the time of the observation y_{t+1} being scored.
    """

    label_a: str
    label_b: str
    times: np.ndarray
    log_bayes_factors: np.ndarray
    logpred_a: np.ndarray
    logpred_b: np.ndarray

    @property
    def bayes_factors(self):
        return np.exp(self.log_bayes_factors)

    @property
    def running_mean(self):
        """Running mean of H_t(1)."""
        return np.cumsum(self.bayes_factors) / np.arange(1, len(self.times) + 1)

    @property
    def mean_bayes_factor(self):
        return float(np.mean(self.bayes_factors))

    @property
    def mean_log_bayes_factor(self):
        return float(np.mean(self.log_bayes_factors))


@dataclass(frozen=True, eq=False)
class LikelihoodReport:
    """
    Log-likelihood evaluated at the posterior means of the volatility.

    total = constant + quadratic_term + previous_logdet_term
            + current_logdet_term + eigenvalue_term
    """

    total: float
    constant: float
    quadratic_term: float
    previous_logdet_term: float
    current_logdet_term: float
    eigenvalue_term: float
    times: np.ndarray
    per_step: np.ndarray
    survived: np.ndarray
    metadata: dict = field(default_factory=dict)

    def summary(self):
        """JSON-ready totals, components and transition-eigenvalue counts."""
        return {
            'total': self.total,
            'constant': self.constant,
            'quadratic_term': self.quadratic_term,
            'previous_logdet_term': self.previous_logdet_term,
            'current_logdet_term': self.current_logdet_term,
            'eigenvalue_term': self.eigenvalue_term,
            'steps': int(self.survived.size),
            'steps_without_eigenvalue': int(np.sum(self.survived == 0)),
            'steps_with_one_eigenvalue': int(np.sum(self.survived == 1)),
            'steps_with_more_eigenvalues': int(np.sum(self.survived > 1)),
            **self.metadata,
        }


def _standard_scale(diagnostics, dof):
    return diagnostics.Qstar1 / dof


def log_bayes_factor_step(diag_a, diag_b, y_next, config):
    """
    log H_t(1) for two one-step predictives scored at y_{t+1}.

    Uses the Student t scale A_i = Q*_i(1) / (beta n) of each model:

        log H = 1/2 (log|A_b| - log|A_a|)
                - (beta n + p)/2 [log(beta n + e_a' A_a^{-1} e_a)
                                  - log(beta n + e_b' A_b^{-1} e_b)]
    """
    y_next = np.atleast_1d(np.asarray(y_next, dtype=float))
    dof, p = config.dof, config.p
    if y_next.shape != (p,):
        raise ConfigurationError(f'observation must have dimension {p}')

    kernels = []
    logdets = []
    for diagnostics in (diag_a, diag_b):
        scale = _standard_scale(diagnostics, dof)
        try:
            factor = linalg.cho_factor(scale, lower=True)
        except linalg.LinAlgError as exc:
            raise NumericalBreakdown('one-step scale is not positive definite', t=diagnostics.t) from exc
        e = y_next - diagnostics.mean
        kernels.append(np.log(dof + float(e @ linalg.cho_solve(factor, e))))
        logdets.append(2.0 * np.sum(np.log(np.diag(factor[0]))))

    return 0.5 * (logdets[1] - logdets[0]) - 0.5 * (dof + p) * (kernels[0] - kernels[1])


def bayes_factor_step(diag_a, diag_b, y_next, config):
    """H_t(1) > 0; values above 1 favour model A."""
    return float(np.exp(log_bayes_factor_step(diag_a, diag_b, y_next, config)))


def _check_comparable(config_a, config_b):
    if config_a.p != config_b.p:
        raise ConfigurationError('compared models must share the series dimension p')
    if config_a.beta != config_b.beta:
        raise ConfigurationError(
            'Bayes factors need a common beta (the predictive dof beta n is shared); '
            'compare across beta values with the log-likelihood instead'
        )


def compare_models(series, config_a, config_b, priors=None, options=DEFAULT_OPTIONS):
    """
    Run two filters in lockstep and score each shared step.

    Steps are compared from t = max(d_a, d_b) + 1 on, where both models have
    a data-based one-step forecast.

    Args:
        priors: optional (prior_a, prior_b); default_prior otherwise

    Returns:
        ComparisonTrace
    """
    _check_comparable(config_a, config_b)
    values = series_values(series)
    prior_a, prior_b = priors or (default_prior(config_a), default_prior(config_b))
    start = max(config_a.d, config_b.d)

    run_a = iter_filter(values, config_a, prior_a, options)
    run_b = iter_filter(values, config_b, prior_b, options)

    times, log_factors, logpred_a, logpred_b = [], [], [], []
    for (_, diag_a), (_, diag_b) in _aligned(run_a, run_b, start):
        y = values[diag_a.t - 1]
        times.append(diag_a.t)
        log_factors.append(log_bayes_factor_step(diag_a, diag_b, y, config_a))
        logpred_a.append(diag_a.logpred)
        logpred_b.append(diag_b.logpred)

    trace = ComparisonTrace(
        label_a=config_a.label(),
        label_b=config_b.label(),
        times=np.array(times, dtype=int),
        log_bayes_factors=np.array(log_factors),
        logpred_a=np.array(logpred_a),
        logpred_b=np.array(logpred_b),
    )
    logger.info(
        '%s vs %s: mean Bayes factor %.4f over %d steps',
        trace.label_a, trace.label_b, trace.mean_bayes_factor, len(times),
    )
    return trace


def _aligned(run_a, run_b, start):
    """Drop the early steps of the lower-order run so both yield the same t."""
    def from_start(run):
        for state, diagnostics in run:
            if diagnostics.t > start:
                yield state, diagnostics
    return zip(from_start(run_a), from_start(run_b))


def compare_against(series, reference, rivals, priors=None, options=DEFAULT_OPTIONS):
    """
    Bayes-factor traces of ``reference`` against each rival configuration.

    Args:
        priors: optional callable config -> Prior

    Returns:
        list of ComparisonTrace, in rival order
    """
    make_prior = priors or default_prior
    return [
        compare_models(series, reference, rival, (make_prior(reference), make_prior(rival)), options)
        for rival in rivals
    ]


def _cholesky_logdet(matrix, t, name):
    """Lower Cholesky factor and log-determinant of a plug-in volatility."""
    try:
        factor = linalg.cholesky(matrix, lower=True)
    except linalg.LinAlgError as exc:
        raise NumericalBreakdown(f'{name} is not positive definite', t=t) from exc
    return factor, 2.0 * float(np.sum(np.log(np.diag(factor))))


def _volatility_inverse_pair(previous, current, n, t):
    """Lower Cholesky factor U' of Sigma_{t-1}^{-1}, and Sigma_t^{-1}."""
    try:
        previous_precision = (n - 2.0) * linalg.inv(previous.S)
        current_precision = (n - 2.0) * linalg.inv(current.S)
        lower = linalg.cholesky(symmetrize(previous_precision), lower=True)
    except linalg.LinAlgError as exc:
        raise NumericalBreakdown('volatility precision is not positive definite', t=t) from exc
    return lower, symmetrize(current_precision)


def evaluate_log_likelihood(snapshots, series, config):
    """
    Log-likelihood of Sigma_{d+1}..Sigma_N with Sigma_t replaced by S_t / (n - 2).

    Needs the full, unthinned posterior trajectory from t = d to t = N.

    Flow:
    1. Constant term from the multivariate gamma ratio
    2. Per step: error quadratic form and the log-determinant pair
    3. Per step: log of the transition eigenvalues above
       1e-10 x the largest one (and above the roundoff of the whitening)

    Returns:
        LikelihoodReport; summary() gives the JSON form written by the commands

    Raises:
        ConfigurationError: thinned trajectory, or n <= p - 1 (no multivariate gamma)
        NumericalBreakdown: a plug-in volatility that is not positive definite, or a
            negative eigenvalue in the volatility-transition term
    """
    values = series_values(series)
    n_obs = values.shape[0]
    n, k, p = config.n, config.k, config.p

    times_present = [state.t for state in snapshots]
    if times_present != list(range(config.d, n_obs + 1)):
        raise ConfigurationError(
            'the log-likelihood needs the full posterior trajectory t = d..N; '
            'run the filter with snapshot_every=1'
        )

    try:
        log_gamma_ratio = multigammaln(0.5 * (n + 1.0), p) - multigammaln(0.5 * n, p)
    except ValueError as exc:
        raise ConfigurationError(
            f'multivariate gamma undefined for n={n:.4g}, p={p}; choose a larger beta'
        ) from exc
    constant = (
        -0.5 * n_obs * p * np.log(2.0 * np.pi ** 2)
        - 0.5 * n_obs * p * (n - p) * np.log(k)
        + n_obs * log_gamma_ratio
    )

    steps = len(snapshots) - 1
    quadratic = np.empty(steps)
    previous_logdet = np.empty(steps)
    current_logdet = np.empty(steps)
    eigen_term = np.empty(steps)
    survived = np.empty(steps, dtype=int)
    identity = np.eye(p)

    for i in range(steps):
        previous, current = snapshots[i], snapshots[i + 1]
        t = current.t

        # One-step error of the posterior at t-1
        design = build_design(previous.history, p=p, d=config.d)
        e = values[t - 1] - previous.m.T @ design

        # Quadratic form and log-determinants at the plug-in volatilities
        sigma_current = current.S / (n - 2.0)
        sigma_previous = previous.S / (n - 2.0)
        current_factor, current_logdet[i] = _cholesky_logdet(sigma_current, t, 'Sigma_t')
        _, previous_logdet[i] = _cholesky_logdet(sigma_previous, t - 1, 'Sigma_{t-1}')
        quadratic[i] = float(e @ linalg.cho_solve((current_factor, True), e))

        # Transition eigenvalues of I - k^{-1} U'^{-1} Sigma_t^{-1} U^{-1}, U' = lower
        lower, precision = _volatility_inverse_pair(previous, current, n, t)
        half = linalg.solve_triangular(lower, precision, lower=True)
        whitened = linalg.solve_triangular(lower, half.T, lower=True).T
        eigenvalues = linalg.eigvalsh(symmetrize(identity - whitened / k))

        # Relative cutoff, never below the roundoff of the whitening
        roundoff = ROUNDOFF_FACTOR * p * np.finfo(float).eps * np.linalg.cond(lower) ** 2
        tolerance = max(EIGENVALUE_THRESHOLD * abs(eigenvalues[-1]), roundoff)
        if eigenvalues[0] < -tolerance:
            raise NumericalBreakdown(
                f'negative eigenvalue {eigenvalues[0]:.3g} in the volatility transition; '
                f'condition number of Sigma_t {np.linalg.cond(sigma_current):.3g}',
                t=t,
            )
        kept = eigenvalues[eigenvalues > tolerance]
        survived[i] = kept.size
        eigen_term[i] = float(np.sum(np.log(kept)))

    quadratic_term = -0.5 * quadratic
    previous_term = 0.5 * (n - p) * previous_logdet
    current_term = -0.5 * (n - p) * current_logdet
    eigenvalue_term = -0.5 * p * eigen_term
    per_step = quadratic_term + previous_term + current_term + eigenvalue_term

    if np.any(survived > 1):
        logger.debug('%d steps kept more than one transition eigenvalue', int(np.sum(survived > 1)))

    return LikelihoodReport(
        total=float(constant + per_step.sum()),
        constant=float(constant),
        quadratic_term=float(quadratic_term.sum()),
        previous_logdet_term=float(previous_term.sum()),
        current_logdet_term=float(current_term.sum()),
        eigenvalue_term=float(eigenvalue_term.sum()),
        times=np.array([state.t for state in snapshots[1:]], dtype=int),
        per_step=per_step,
        survived=survived,
        metadata={
            'volatility_plugin': 'S_t/(n-2)',
            'gamma_ratio': 'multivariate Gamma_p((n+1)/2)/Gamma_p(n/2)',
            'log_gamma_ratio': float(log_gamma_ratio),
            'n_obs': n_obs,
        },
    )


@dataclass(eq=False)
class GridCell:
    """One (d, delta, beta) cell of a selection grid."""

    d: int
    delta: float
    beta: float
    loglik: float = np.nan
    msse: np.ndarray = None
    mae: np.ndarray = None
    rank: int = 0
    error: str = ''
    likelihood: dict = None

    @property
    def failed(self):
        return bool(self.error)


def _evaluate_cell(series, cell, p, make_prior, options):
    try:
        config = ModelConfig(p=p, d=cell.d, delta=cell.delta, beta=cell.beta)
        run = run_filter(series, config, make_prior(config), options)
        report = evaluate_log_likelihood(run.snapshots, series, config)
        (one_step,) = metrics_from_states(run.snapshots, series_values(series), config, [1])
    except TVVARError as exc:
        logger.warning('grid cell d=%s delta=%s beta=%s failed: %s', cell.d, cell.delta, cell.beta, exc)
        cell.error = str(exc) or exc.__class__.__name__
        return cell
    cell.loglik = report.total
    cell.likelihood = report.summary()
    cell.msse = one_step.msse
    cell.mae = one_step.mae
    return cell


def _rank_key(cell):
    if cell.failed or not np.isfinite(cell.loglik):
        return (1, 0.0, 0.0, cell.d)
    return (0, -cell.loglik, float(np.linalg.norm(cell.msse - 1.0)), cell.d)


def grid_search(series, d_values, delta_values, beta_values, priors=None, jobs=1, options=None):
    """
    Evaluate log-likelihood, MSSE(1) and MAE(1) on every (d, delta, beta) cell.

    Cells are ranked by log-likelihood (largest first), ties broken by the
    distance of MSSE(1) from the all-ones vector and then by smaller d.  Failed
    cells are kept, flagged and ranked last.

    Args:
        priors: optional callable config -> Prior
        jobs (int): worker threads; output order does not depend on it

    Returns:
        list of GridCell in rank order
    """
    cells = [
        GridCell(d=int(d), delta=float(delta), beta=float(beta))
        for d in d_values for delta in delta_values for beta in beta_values
    ]
    if not cells:
        raise ConfigurationError('the selection grid is empty')

    values = series_values(series)
    make_prior = priors or default_prior
    options = options or FilterOptions(snapshot_every=1)
    if options.snapshot_every != 1:
        raise ConfigurationError('grid_search needs unthinned filter runs')

    def evaluate(cell):
        return _evaluate_cell(values, cell, values.shape[1], make_prior, options)

    if jobs and jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            evaluated = list(pool.map(evaluate, cells))
    else:
        evaluated = [evaluate(cell) for cell in cells]

    ranked = sorted(evaluated, key=_rank_key)
    for position, cell in enumerate(ranked, start=1):
        cell.rank = position
    return ranked
