"""
Synthetic data from the TV-VAR generative model.

Volatility evolves by the multiplicative singular-beta law

    Sigma_t^{-1} = k U(Sigma_{t-1}^{-1})' B_t U(Sigma_{t-1}^{-1})

with U(X) the upper Cholesky factor of X and B_t a singular multivariate beta
with parameters ((beta n + p - 1)/2, 1/2).  That first parameter is the one for
which E(B_t) = k^{-1} I, so E(Sigma_t^{-1}) = Sigma_{t-1}^{-1}.  B_t is drawn as

    G ~ W_p(beta n + p - 1, I),  g ~ N_p(0, I),  H = G + g g',
    B = U(H)'^{-1} G U(H)^{-1}

which leaves I - B = w w' of rank one.
"""
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .exceptions import ConfigurationError, NumericalBreakdown, SimulationDiverged
from .linalg import psd_factor, symmetrize
from .model_core import ModelConfig, build_design

logger = logging.getLogger(__name__)

VOLATILITY_MODES = ('fixed', 'beta', 'path')


def sample_matrix_normal(M, U, V, rng):
    """
    Draw X ~ N(M, U, V), i.e. vec(X - M) ~ N(0, V kron U).

    Args:
        M (array): r x c location
        U (array): r x r row spread (positive semidefinite)
        V (array): c x c column spread (positive semidefinite)
        rng (numpy.random.Generator)
    """
    M = np.asarray(M, dtype=float)
    try:
        row_factor = psd_factor(np.asarray(U, dtype=float))
        col_factor = psd_factor(np.asarray(V, dtype=float))
    except ValueError as exc:
        raise ConfigurationError(f'matrix-normal spread: {exc}') from exc
    Z = rng.standard_normal(M.shape)
    return M + row_factor @ Z @ col_factor.T


def sample_wishart_identity(dof, p, rng, size=None):
    """
    Bartlett draws of W_p(dof, I) for real dof > p - 1.

    Returns:
        array of shape (p, p), or (size, p, p) when ``size`` is given
    """
    if dof <= p - 1:
        raise ConfigurationError(f'Wishart degrees of freedom {dof:.4g} must exceed p - 1 = {p - 1}')
    count = 1 if size is None else int(size)
    bartlett = np.zeros((count, p, p))
    rows, cols = np.tril_indices(p, k=-1)
    bartlett[:, rows, cols] = rng.standard_normal((count, rows.size))
    chi_dof = dof - np.arange(p)
    bartlett[:, np.arange(p), np.arange(p)] = np.sqrt(rng.chisquare(chi_dof, size=(count, p)))
    draws = bartlett @ bartlett.transpose(0, 2, 1)
    return draws[0] if size is None else draws


def sample_singular_beta(config, rng, size=None):
    """
    Singular multivariate beta B((beta n + p - 1)/2, 1/2) draws.

    Returns:
        array of shape (p, p), or (size, p, p)
    """
    p = config.p
    count = 1 if size is None else int(size)
    G = sample_wishart_identity(config.dof + p - 1.0, p, rng, size=count)
    g = rng.standard_normal((count, p, 1))
    H = G + g @ g.transpose(0, 2, 1)
    try:
        lower = np.linalg.cholesky(H)
    except np.linalg.LinAlgError as exc:
        raise NumericalBreakdown('Cholesky of G + g g\' failed while sampling B_t') from exc
    half = np.linalg.solve(lower, G)
    B = np.linalg.solve(lower, half.transpose(0, 2, 1))
    B = 0.5 * (B + B.transpose(0, 2, 1))
    return B[0] if size is None else B


def sample_singular_beta_evolution(sigma_prev, config, rng, size=None):
    """
    Sigma_t from Sigma_{t-1} under the singular-beta volatility law.

    Returns:
        p x p positive-definite matrix, or (size, p, p) independent draws
    """
    sigma_prev = np.asarray(sigma_prev, dtype=float)
    try:
        precision_factor = linalg.cholesky(linalg.inv(sigma_prev), lower=True)
    except linalg.LinAlgError as exc:
        raise ConfigurationError('Sigma_{t-1} must be symmetric positive definite') from exc

    B = sample_singular_beta(config, rng, size=size)
    # U(Sigma^{-1})' B U(Sigma^{-1}) with U' = precision_factor
    precision = config.k * (precision_factor @ B @ precision_factor.T)
    sigma = np.linalg.inv(precision)
    return 0.5 * (sigma + np.swapaxes(sigma, -1, -2))


@dataclass(eq=False)
class SimSpec:
    """
    Everything needed to reproduce one synthetic data set.

    - config: model dimensions and discounts (delta also drives W_t)
    - phi0: true Phi_d, (dp+1) x p
    - sigma0: true Sigma_d, p x p
    - n_obs: series length N
    - volatility_mode: 'fixed', 'beta' (singular-beta evolution) or 'path'
    - sigma_path: N x p x p volatility path for mode 'path' (row t-1 is Sigma_t)
    - state_spread: nominal P* with W_t = Delta^{-1/2} P* Delta^{-1/2} - P*
    - explosion_guard: abort when ||y_t|| exceeds it
    """

    config: ModelConfig
    phi0: np.ndarray
    sigma0: np.ndarray
    n_obs: int
    seed: int = 0
    volatility_mode: str = 'beta'
    sigma_path: np.ndarray = None
    state_spread: np.ndarray = None
    explosion_guard: float = 1e6
    labels: list = field(default_factory=list)

    def __post_init__(self):
        p, dim = self.config.p, self.config.dim
        self.phi0 = np.asarray(self.phi0, dtype=float)
        self.sigma0 = np.asarray(self.sigma0, dtype=float)
        if self.state_spread is None:
            self.state_spread = 0.01 * np.eye(dim)
        self.state_spread = np.asarray(self.state_spread, dtype=float)
        if not self.labels:
            self.labels = [f'y{i + 1}' for i in range(p)]

        if self.phi0.shape != (dim, p):
            raise ConfigurationError(f'phi0 must have shape {(dim, p)}')
        if self.state_spread.shape != (dim, dim):
            raise ConfigurationError(f'state_spread must have shape {(dim, dim)}')
        if self.sigma0.shape != (p, p) or not np.allclose(self.sigma0, self.sigma0.T):
            raise ConfigurationError('sigma0 must be a symmetric p x p matrix')
        try:
            linalg.cholesky(self.sigma0, lower=True)
        except linalg.LinAlgError as exc:
            raise ConfigurationError('sigma0 must be positive definite') from exc
        if self.volatility_mode not in VOLATILITY_MODES:
            raise ConfigurationError(f'volatility_mode must be one of {VOLATILITY_MODES}')
        if self.volatility_mode == 'path':
            if self.sigma_path is None:
                raise ConfigurationError("volatility_mode 'path' needs sigma_path")
            self.sigma_path = np.asarray(self.sigma_path, dtype=float)
            if self.sigma_path.shape != (self.n_obs, p, p):
                raise ConfigurationError(f'sigma_path must have shape {(self.n_obs, p, p)}')
        if len(self.labels) != p:
            raise ConfigurationError('labels must name every series component')
        if self.n_obs < self.config.d + 1:
            raise ConfigurationError(f'n_obs must be at least d + 1 = {self.config.d + 1}')

    def to_dict(self):
        return {
            'config': self.config.to_dict(),
            'phi0': self.phi0.tolist(),
            'sigma0': self.sigma0.tolist(),
            'n_obs': self.n_obs,
            'seed': self.seed,
            'volatility_mode': self.volatility_mode,
            'sigma_path': None if self.sigma_path is None else self.sigma_path.tolist(),
            'state_spread': self.state_spread.tolist(),
            'explosion_guard': self.explosion_guard,
            'labels': list(self.labels),
        }

    @classmethod
    def from_dict(cls, data):
        """
        SimSpec from the JSON form written by to_dict.

        Raises:
            ConfigurationError: missing or unknown keys, or an invalid spec
        """
        data = dict(data)
        try:
            data['config'] = ModelConfig(**data['config'])
            return cls(**data)
        except ConfigurationError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigurationError(f'invalid simulation spec: {exc}') from exc


@dataclass(frozen=True, eq=False)
class SimulationTruth:
    """True Phi_t and Sigma_t for t = d..N (row i is t = d + i)."""

    times: np.ndarray
    phi: np.ndarray
    sigma: np.ndarray


def spawn_seeds(seed, count):
    """Independent child seeds for parallel simulation runs."""
    children = np.random.SeedSequence(seed).spawn(count)
    return [int(child.generate_state(1)[0]) for child in children]


def generate(spec):
    """
    Simulate y_1..y_N from ``spec``.

    The first d observations are N_p(0, Sigma_d) draws; afterwards Sigma_t
    follows the chosen volatility mode, Phi_t = Phi_{t-1} + Omega_t with
    Omega_t ~ N(0, W_t, Sigma_t), and y_t = Phi_t' F_t + eps_t.

    Returns:
        tuple: (SeriesFrame, SimulationTruth)

    Raises:
        SimulationDiverged: ||y_t|| crossed the explosion guard
    """
    from pipeline.frames import SeriesFrame

    config = spec.config
    p, d = config.p, config.d
    rng = np.random.default_rng(spec.seed)

    scale = 1.0 / np.sqrt(config.delta)
    W = symmetrize(spec.state_spread * np.outer(scale, scale) - spec.state_spread)

    values = np.empty((spec.n_obs, p))
    noise_factor = linalg.cholesky(spec.sigma0, lower=True)
    for row in range(d):
        values[row] = noise_factor @ rng.standard_normal(p)

    phi = spec.phi0.copy()
    sigma = spec.sigma0.copy()
    phis = [phi]
    sigmas = [sigma]

    for t in range(d + 1, spec.n_obs + 1):
        if spec.volatility_mode == 'beta':
            sigma = sample_singular_beta_evolution(sigma, config, rng)
        elif spec.volatility_mode == 'path':
            sigma = spec.sigma_path[t - 1]

        phi = phi + sample_matrix_normal(np.zeros_like(phi), W, sigma, rng)
        design = build_design(values[t - 1 - d:t - 1][::-1], p=p, d=d)
        noise = linalg.cholesky(sigma, lower=True) @ rng.standard_normal(p)
        y = phi.T @ design + noise

        if not np.all(np.isfinite(y)) or np.linalg.norm(y) > spec.explosion_guard:
            raise SimulationDiverged(
                f'simulated series exceeded the explosion guard {spec.explosion_guard:g}',
                t=t, seed=spec.seed,
            )
        values[t - 1] = y
        phis.append(phi)
        sigmas.append(sigma)

    logger.debug('simulated %d observations (mode=%s, seed=%s)', spec.n_obs, spec.volatility_mode, spec.seed)
    frame = SeriesFrame(
        labels=list(spec.labels),
        times=np.arange(1, spec.n_obs + 1),
        values=values,
        transform='none',
    )
    truth = SimulationTruth(
        times=np.arange(d, spec.n_obs + 1),
        phi=np.array(phis),
        sigma=np.array(sigmas),
    )
    return frame, truth
