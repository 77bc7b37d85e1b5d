"""
Multivariate Student t density used for one-step predictives and Bayes factors.

Convention: t_p(nu, loc, A) has density

    Gamma((nu+p)/2) nu^(nu/2) / (Gamma(nu/2) pi^(p/2)) * |A|^(-1/2)
        * (nu + z'A^{-1}z)^(-(nu+p)/2),     z = x - loc

so A is the usual scale matrix and the variance is nu A / (nu - 2).  The filter
passes A = Q* / nu, which turns the variance into Q* / (nu - 2), the forecast
covariance of the model.
"""
import numpy as np
from scipy import linalg
from scipy.special import gammaln
from scipy.stats import t as student_t

from .exceptions import NumericalBreakdown


def mvt_log_normalizer(dof, dim):
    """log of Gamma((nu+p)/2) nu^(nu/2) / (Gamma(nu/2) pi^(p/2))."""
    return (
        gammaln(0.5 * (dof + dim))
        - gammaln(0.5 * dof)
        + 0.5 * dof * np.log(dof)
        - 0.5 * dim * np.log(np.pi)
    )


def mvt_logpdf(x, loc, scale, dof):
    """
    Log density of the p-variate Student t at ``x``.

    Args:
        x (array): p-vector
        loc (array): p-vector location
        scale (array): p x p symmetric positive-definite scale A
        dof (float): degrees of freedom nu > 0

    Returns:
        float: log density
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    loc = np.atleast_1d(np.asarray(loc, dtype=float))
    scale = np.atleast_2d(np.asarray(scale, dtype=float))
    dim = x.shape[0]
    if loc.shape != (dim,) or scale.shape != (dim, dim):
        raise ValueError('x, loc and scale have incompatible shapes')

    try:
        factor = linalg.cholesky(scale, lower=True)
    except linalg.LinAlgError as exc:
        raise NumericalBreakdown('Student t scale is not positive definite') from exc

    z = linalg.solve_triangular(factor, x - loc, lower=True)
    mahalanobis = float(z @ z)
    half_logdet = np.sum(np.log(np.diag(factor)))
    return (
        mvt_log_normalizer(dof, dim)
        - half_logdet
        - 0.5 * (dof + dim) * np.log(dof + mahalanobis)
    )


def t_quantile(level, dof):
    """Upper (1 + level)/2 quantile of the standard univariate t with ``dof``."""
    return student_t.ppf(0.5 * (1.0 + level), dof)
