"""Smoothing-spline estimate of the gridized spectral density on ``[0, omega_c]``.

The estimate is a cosine series in the lag moments ``S_k / n_k`` shrunk by
``w_k = n_k / (n_k + 2 (k pi)^2 lambda)``. Its normalisation is one-sided:
``C(h) = int_0^omega_c f(w) cos(w h) dw``, so twice the two-sided density
of :mod:`semispec.models`.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import EstimationError, ParameterError
from .gridize import GridSpec, LagSums, accumulate_lag_sums, default_cutoff
from .simulate import SampleSet

log = logging.getLogger(__name__)

N_LAMBDA = 40


@dataclass(frozen=True, eq=False)
class SplineSpectral:
    lag_sums: LagSums
    omega_c: float
    lam: float
    gcv_score: float = math.nan
    weights: np.ndarray = field(init=False, repr=False)
    coef: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not self.lam >= 0:
            raise ParameterError(f"lambda must be nonnegative, got {self.lam}")
        if not self.omega_c > 0:
            raise ParameterError(f"omega_c must be positive, got {self.omega_c}")
        w = shrinkage_weights(self.lag_sums, self.lam)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "coef", w * self.lag_sums.moments()[1:])

    @property
    def variance(self) -> float:
        """``S_0 / n_0``."""
        if self.lag_sums.n[0] <= 0:
            raise EstimationError("lag class 0 is empty; no data")
        return float(self.lag_sums.s[0] / self.lag_sums.n[0])

    @property
    def frequencies(self) -> np.ndarray:
        """Cosine-series frequencies ``k pi / omega_c`` for ``k = 1..K``."""
        return math.pi * np.arange(1, self.coef.size + 1) / self.omega_c

    def __call__(self, omega):
        return eval_f_delta(self, omega)

    def covariance(self, h):
        return hhc_covariance(self, h)

    def to_dict(self) -> dict:
        return {"omega_c": self.omega_c, "lambda": self.lam, "gcv_score": self.gcv_score,
                "K": self.lag_sums.max_lag, "lag_sums": self.lag_sums.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "SplineSpectral":
        return cls(LagSums.from_dict(d["lag_sums"]), float(d["omega_c"]), float(d["lambda"]),
                   float(d.get("gcv_score", math.nan)))


def shrinkage_weights(lag_sums: LagSums, lam: float) -> np.ndarray:
    """``w_k`` for ``k = 1..K``; empty classes get weight 0."""
    n = lag_sums.n[1:].astype(float)
    k = np.arange(1, n.size + 1)
    den = n + 2.0 * (k * math.pi) ** 2 * lam
    w = np.zeros_like(n)
    nz = n > 0
    w[nz] = n[nz] / den[nz]
    return w


def eval_f_delta(est: SplineSpectral, omega):
    """Evaluate the cosine-series estimate at ``omega`` in ``[0, omega_c]``.

    Values may be negative; the series is not sign constrained.
    """
    w = np.asarray(omega, dtype=float)
    flat = w.ravel()
    series = _kernels.cosine_transform(est.frequencies, est.coef, flat)
    out = (est.variance + 2.0 * series) / est.omega_c
    return float(out[0]) if w.ndim == 0 else out.reshape(w.shape)


def hhc_covariance(est: SplineSpectral, h):
    """Closed-form ``int_0^omega_c f(w) cos(w h) dw`` of the spline estimate."""
    h = np.asarray(h, dtype=float)
    flat = np.abs(h).ravel()
    x = est.omega_c * flat
    out = est.variance * np.sinc(x / math.pi)
    if est.coef.size:
        out = out + _kernels.sinc_pair_series(est.coef, est.omega_c, flat)
    return float(out[0]) if h.ndim == 0 else out.reshape(h.shape)


def default_lambda_grid(n: int, size: int = N_LAMBDA) -> np.ndarray:
    """``size`` log-spaced values on ``[1/n, n]``."""
    return np.logspace(-math.log10(n), math.log10(n), size)


def gcv_score(lag_sums: LagSums, lam: float) -> float:
    """GCV criterion of the linear shrinkage ``y_k -> w_k y_k`` over nonempty classes ``k >= 1``.

    Returns ``inf`` when the denominator degenerates.
    """
    n = lag_sums.n[1:]
    nz = n > 0
    k_eff = int(nz.sum())
    if k_eff == 0:
        raise EstimationError("no nonempty lag class with k >= 1")
    y = lag_sums.moments()[1:][nz]
    w = shrinkage_weights(lag_sums, lam)[nz]
    rss = float(np.sum(n[nz] * ((1.0 - w) * y) ** 2))
    den = (1.0 - w.sum() / k_eff) ** 2
    if den <= 1e-14:
        return math.inf
    return rss / den


def select_lambda_gcv(lag_sums: LagSums, candidates) -> float:
    """Candidate minimising :func:`gcv_score`; ties go to the smaller lambda."""
    cand = np.sort(np.asarray(candidates, dtype=float).ravel())
    if cand.size == 0 or np.any(cand <= 0):
        raise ParameterError("lambda candidates must be a nonempty set of positive values")
    scores = np.array([gcv_score(lag_sums, lam) for lam in cand])
    if not np.any(np.isfinite(scores)):
        lam = float(np.median(cand))
        log.warning("GCV denominator degenerate for every candidate; using median lambda %g", lam)
        return lam
    return float(cand[int(np.argmin(scores))])


def fit_hhc(sample: SampleSet, omega_c: float | None = None, lambda_grid=None,
            max_lag: int | None = None) -> SplineSpectral:
    """Gridize, pick lambda by GCV and return the spline estimate."""
    omega_c = default_cutoff(sample) if omega_c is None else float(omega_c)
    grid = GridSpec.covering(sample.domain_length, omega_c)
    sums = accumulate_lag_sums(sample, grid, max_lag)
    if sums.nonzero_lags == 0:
        raise EstimationError("every lag class k >= 1 is empty; refine the grid")
    cand = default_lambda_grid(sample.n) if lambda_grid is None else lambda_grid
    lam = select_lambda_gcv(sums, cand)
    return SplineSpectral(sums, omega_c, lam, gcv_score(sums, lam))
