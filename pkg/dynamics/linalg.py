"""
Small dense linear-algebra helpers used by the filter, forecasts and metrics.
"""
import logging

import numpy as np
from scipy import linalg

from .exceptions import NumericalBreakdown

logger = logging.getLogger(__name__)


def symmetrize(matrix):
    """Return (X + X') / 2."""
    return 0.5 * (matrix + matrix.T)


def jittered_cholesky(matrix, t=None, jitter_scale=1e-10, max_escalations=3, name='matrix'):
    """
    Lower Cholesky factor of a symmetric matrix, adding diagonal jitter on failure.

    The first retry adds ``jitter_scale * trace / dim`` to the diagonal and each
    further retry multiplies the jitter by 10.

    Returns:
        tuple: (matrix actually factorized, lower factor, jitter applied)

    Raises:
        NumericalBreakdown: if the last escalation still fails
    """
    try:
        return matrix, linalg.cholesky(matrix, lower=True), 0.0
    except linalg.LinAlgError:
        pass

    dim = matrix.shape[0]
    base = jitter_scale * abs(np.trace(matrix)) / dim
    if base == 0.0:
        base = jitter_scale
    jitter = base
    for _ in range(max_escalations):
        candidate = matrix + jitter * np.eye(dim)
        try:
            factor = linalg.cholesky(candidate, lower=True)
        except linalg.LinAlgError:
            jitter *= 10.0
            continue
        logger.warning('%s not positive definite at t=%s; added jitter %.3g', name, t, jitter)
        return candidate, factor, jitter

    raise NumericalBreakdown(f'{name} is not positive definite after jitter', t=t)


def inverse_sqrt(matrix, t=None, name='matrix'):
    """Symmetric inverse square root X^{-1/2} via eigendecomposition."""
    values, vectors = linalg.eigh(matrix)
    if values[0] <= 0.0:
        raise NumericalBreakdown(f'{name} has a non-positive eigenvalue {values[0]:.3g}', t=t)
    return (vectors / np.sqrt(values)) @ vectors.T


def psd_factor(matrix, tol=1e-12):
    """
    Factor A with A A' = X for a symmetric positive-semidefinite X.

    Cholesky when X is definite, otherwise an eigendecomposition with tiny
    negative eigenvalues clipped to zero.

    Raises:
        ValueError: if X has an eigenvalue below -tol * max(|eigenvalues|)
    """
    try:
        return linalg.cholesky(matrix, lower=True)
    except linalg.LinAlgError:
        pass
    values, vectors = linalg.eigh(symmetrize(matrix))
    scale = max(np.max(np.abs(values)), 1.0)
    if values[0] < -tol * scale:
        raise ValueError(f'matrix is not positive semidefinite (eigenvalue {values[0]:.3g})')
    return vectors * np.sqrt(np.clip(values, 0.0, None))
