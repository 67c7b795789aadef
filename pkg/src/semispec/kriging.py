"""Simple (zero-mean) kriging with an arbitrary covariance evaluator.

Estimated covariances need not be positive definite, so the factorisation
walks a short jitter ladder and records the level it settled on.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import linalg

from .errors import DataError, NumericalError, ParameterError
from .simulate import SampleSet

log = logging.getLogger(__name__)

# relative to C(0)
JITTER_LADDER = (0.0, 1e-8, 1e-6, 1e-4)

CovarianceEvaluator = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class KrigingResult:
    targets: np.ndarray
    predictions: np.ndarray
    jitter: float = 0.0
    kriging_variance: np.ndarray | None = None

    def __len__(self):
        return self.targets.size


def prediction_targets(domain_length: float, n_pred: int = 100) -> np.ndarray:
    """``n_pred`` equally spaced interior points ``L i / (n_pred + 1)``."""
    if n_pred < 1:
        raise ParameterError(f"n_pred must be at least 1, got {n_pred}")
    if not domain_length > 0:
        raise ParameterError(f"domain_length must be positive, got {domain_length}")
    return domain_length * np.arange(1, n_pred + 1) / (n_pred + 1)


def covariance_matrix(cov: CovarianceEvaluator, s: np.ndarray, c0: float | None = None) -> np.ndarray:
    """``Sigma_ij = cov(|s_i - s_j|)``, evaluating the evaluator on one triangle only."""
    n = s.size
    iu = np.triu_indices(n, 1)
    sigma = np.empty((n, n))
    vals = np.asarray(cov(s[iu[1]] - s[iu[0]]), dtype=float) if n > 1 else np.empty(0)
    sigma[iu] = vals
    sigma[iu[1], iu[0]] = vals
    np.fill_diagonal(sigma, float(np.asarray(cov(np.zeros(1)))[0]) if c0 is None else c0)
    return sigma


def factorize(sigma: np.ndarray, c0: float, name: str = "covariance"):
    """Cholesky factor of ``sigma + eps * c0 * I`` for the first workable ``eps``.

    Returns ``(cho_factor_tuple, eps)``. Raises :class:`NumericalError` when
    every rung of the ladder fails.
    """
    if not np.all(np.isfinite(sigma)):
        raise NumericalError(f"{name}: covariance matrix has non-finite entries")
    if not c0 > 0:
        raise NumericalError(f"{name}: covariance at lag 0 must be positive", c0=c0)
    eye = np.eye(sigma.shape[0])
    for eps in JITTER_LADDER:
        try:
            fac = linalg.cho_factor(sigma + eps * c0 * eye, lower=True, check_finite=False)
        except linalg.LinAlgError:
            continue
        if eps > 0:
            log.info("%s: kriging matrix regularised with jitter %.0e * C(0)", name, eps)
        return fac, eps
    raise NumericalError(f"{name}: kriging matrix not positive definite after regularisation",
                         max_jitter=JITTER_LADDER[-1], c0=c0)


def krige(sample: SampleSet, cov: CovarianceEvaluator, targets, name: str = "covariance",
          with_variance: bool = False) -> KrigingResult:
    """Simple-kriging predictions ``c(s)^T Sigma^-1 X`` at ``targets``.

    Parameters
    ----------
    sample : SampleSet
        Observations.
    cov : callable
        Maps an array of nonnegative lags to covariance values (same shape).
    targets : array_like
        Prediction locations.
    name : str
        Label used in log and error messages.
    with_variance : bool
        Also return ``cov(0) - c^T Sigma^-1 c`` under ``cov``.
    """
    t = np.atleast_1d(np.asarray(targets, dtype=float))
    if t.size == 0:
        raise DataError("no prediction targets")
    s = sample.locations
    c0 = float(np.asarray(cov(np.zeros(1)))[0])
    sigma = covariance_matrix(cov, s, c0)
    fac, eps = factorize(sigma, c0, name)
    cross = np.asarray(cov(np.abs(t[:, None] - s[None, :])), dtype=float)
    alpha = linalg.cho_solve(fac, sample.values, check_finite=False)
    pred = cross @ alpha
    var = None
    if with_variance:
        sol = linalg.cho_solve(fac, cross.T, check_finite=False)
        var = c0 - np.einsum("ij,ji->i", cross, sol)
    if not np.all(np.isfinite(pred)):
        raise NumericalError(f"{name}: non-finite kriging predictions")
    return KrigingResult(t, pred, eps, var)


def ipe(pred_est: KrigingResult, pred_true: KrigingResult, normalize: bool = False) -> np.ndarray:
    """Squared prediction differences ``(Z_hat - Z_hat_0)^2`` per target.

    With ``normalize`` each value is divided by the true kriging variance,
    which must be available on ``pred_true``.
    """
    if pred_est.targets.shape != pred_true.targets.shape or not np.allclose(
            pred_est.targets, pred_true.targets, rtol=0, atol=1e-12):
        raise DataError("kriging results refer to different targets")
    out = (pred_est.predictions - pred_true.predictions) ** 2
    if normalize:
        if pred_true.kriging_variance is None:
            raise ParameterError("normalised IPE needs the true kriging variance")
        out = out / pred_true.kriging_variance
    return out
