"""Small-lag empirical variograms and the log-log regression for the
variogram exponent ``alpha0``; the spectral tail decays at ``alpha0 + 1``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import EstimationError, ParameterError
from .simulate import SampleSet

log = logging.getLogger(__name__)

CLAMP_EPS = 1e-3
N_LAGS = 10
LAG_SPAN = 4.0
H_MAX_FRACTION = 1e-3


@dataclass(frozen=True, eq=False)
class LagSchedule:
    """Lags ``h_m`` with closed tolerance bins ``[h_m - delta_m, h_m + delta_m]``."""

    lags: np.ndarray
    tolerances: np.ndarray

    def __post_init__(self):
        h = np.asarray(self.lags, dtype=float).ravel()
        d = np.asarray(self.tolerances, dtype=float).ravel()
        if h.shape != d.shape:
            raise ParameterError("lags and tolerances differ in length")
        if h.size < 2:
            raise ParameterError("a lag schedule needs at least 2 lags")
        if np.any(np.diff(h) <= 0):
            raise ParameterError("lags must be strictly increasing")
        if np.any(d <= 0) or np.any(d >= h):
            raise ParameterError("tolerances must satisfy 0 < delta_m < h_m")
        if np.any(h[:-1] + d[:-1] >= h[1:] - d[1:]):
            raise ParameterError("tolerance bins overlap")
        object.__setattr__(self, "lags", h)
        object.__setattr__(self, "tolerances", d)

    @property
    def lower(self) -> np.ndarray:
        return self.lags - self.tolerances

    @property
    def upper(self) -> np.ndarray:
        return self.lags + self.tolerances

    def __len__(self):
        return self.lags.size


def geometric_schedule(h_max: float, m: int = N_LAGS, span: float = LAG_SPAN) -> LagSchedule:
    """``m`` log-spaced lags on ``[h_max / span, h_max]``.

    Each half-width is half the gap to the nearer neighbour, which keeps
    the bins disjoint: ``delta_m = h_m (r - 1) / (2 r)`` with ratio ``r``.
    """
    if not h_max > 0:
        raise ParameterError(f"h_max must be positive, got {h_max}")
    if m < 2 or span <= 1:
        raise ParameterError("need m >= 2 lags and span > 1")
    lags = np.geomspace(h_max / span, h_max, m)
    r = span ** (1.0 / (m - 1))
    return LagSchedule(lags, lags * (r - 1.0) / (2.0 * r))


def default_schedule(sample: SampleSet, h_max: float | None = None, m: int = N_LAGS,
                     span: float = LAG_SPAN) -> LagSchedule:
    """Lag schedule for ``sample``; ``h_max`` defaults to ``domain_length / 1000``.

    Lags whose bin lies entirely below the smallest spacing between
    neighbouring locations can hold no pair and are dropped with a warning.
    """
    if sample.n < 8:
        raise ParameterError(f"decay estimation needs at least 8 observations, got {sample.n}")
    if h_max is None:
        h_max = H_MAX_FRACTION * sample.domain_length
    sched = geometric_schedule(h_max, m, span)
    min_gap = float(np.min(np.diff(sample.locations)))
    keep = sched.upper >= min_gap
    if not keep.all():
        log.warning("dropping %d lag(s) below the minimum spacing %.3g", int((~keep).sum()), min_gap)
        if keep.sum() < 2:
            raise EstimationError("fewer than 2 lags remain above the minimum spacing")
        sched = LagSchedule(sched.lags[keep], sched.tolerances[keep])
    return sched


@dataclass(frozen=True, eq=False)
class VariogramTriples:
    lags: np.ndarray
    values: np.ndarray
    counts: np.ndarray

    @property
    def valid(self) -> np.ndarray:
        return self.counts > 0

    def rows(self):
        return list(zip(self.lags.tolist(), self.values.tolist(), self.counts.tolist()))


def empirical_variogram(sample: SampleSet, schedule: LagSchedule) -> VariogramTriples:
    """Mean squared increment over pairs whose distance falls in each bin.

    Bins with no pair get ``u = 0`` and ``N = 0`` and are marked invalid.
    """
    sums, counts = _kernels.binned_pair_sums(sample.locations, sample.values,
                                             schedule.lower, schedule.upper)
    u = np.zeros_like(sums)
    nz = counts > 0
    u[nz] = sums[nz] / counts[nz]
    return VariogramTriples(schedule.lags.copy(), u, np.asarray(counts, dtype=np.int64))


@dataclass(frozen=True)
class DecayEstimate:
    alpha0: float
    intercept: float
    m_used: int
    clamped: bool = False
    raw_alpha0: float = math.nan

    @property
    def gamma(self) -> float:
        return self.alpha0 + 1.0

    def to_dict(self) -> dict:
        return {"alpha0": self.alpha0, "gamma": self.gamma, "intercept": self.intercept,
                "m_used": self.m_used, "clamped": self.clamped, "raw_alpha0": self.raw_alpha0}

    @classmethod
    def from_dict(cls, d: dict) -> "DecayEstimate":
        return cls(float(d["alpha0"]), float(d.get("intercept", math.nan)), int(d.get("m_used", 0)),
                   bool(d.get("clamped", False)), float(d.get("raw_alpha0", d["alpha0"])))


def fit_alpha0(triples: VariogramTriples, eps: float = CLAMP_EPS) -> DecayEstimate:
    """OLS slope of ``log u_m`` on ``log h_m`` over valid, positive triples.

    The slope is clamped into ``[eps, 2 - eps]``; ``clamped`` records it.
    """
    ok = triples.valid & (triples.values > 0)
    if ok.sum() < 2:
        raise EstimationError(f"need at least 2 valid variogram lags, got {int(ok.sum())}")
    x = np.log(triples.lags[ok])
    y = np.log(triples.values[ok])
    xc = x - x.mean()
    sxx = float(np.dot(xc, xc))
    if sxx <= 1e-300:
        raise EstimationError("variogram lags have no spread in log scale")
    slope = float(np.dot(xc, y - y.mean()) / sxx)
    intercept = float(y.mean() - slope * x.mean())
    alpha = min(max(slope, eps), 2.0 - eps)
    return DecayEstimate(alpha, intercept, int(ok.sum()), alpha != slope, slope)


def fit_decay(sample: SampleSet,
              schedule: LagSchedule | None = None) -> tuple[DecayEstimate, VariogramTriples]:
    """Empirical variogram on ``schedule`` (default schedule if omitted) and its OLS fit."""
    schedule = default_schedule(sample) if schedule is None else schedule
    triples = empirical_variogram(sample, schedule)
    return fit_alpha0(triples), triples
