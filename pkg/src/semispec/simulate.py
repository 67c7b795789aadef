"""Zero-mean Gaussian process draws at irregular 1-D locations.

Random streams come from numpy's PCG64 seeded through ``SeedSequence``;
locations and values use distinct spawn keys so a single integer seed
drives both without the streams overlapping. Outputs are reproducible for
a given numpy version; no cross-implementation reproducibility is implied.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .errors import DataError, NumericalError, ParameterError
from .models import CovarianceModel, covariance

log = logging.getLogger(__name__)

_LOC_STREAM = 0
_VALUE_STREAM = 1
JITTER = 1e-10


def rng_for(seed: int, stream: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=(stream,))))


@dataclass(frozen=True, eq=False)
class SampleSet:
    """Observations ``X(s_i)`` at sorted locations inside ``[0, domain_length]``."""

    locations: np.ndarray
    values: np.ndarray
    domain_length: float

    def __post_init__(self):
        s = np.asarray(self.locations, dtype=float).ravel()
        x = np.asarray(self.values, dtype=float).ravel()
        if s.shape != x.shape:
            raise DataError(f"{s.size} locations but {x.size} values")
        if s.size < 2:
            raise DataError(f"need at least 2 observations, got {s.size}")
        if not (np.all(np.isfinite(s)) and np.all(np.isfinite(x))):
            raise DataError("locations and values must be finite")
        length = float(self.domain_length)
        if not length > 0:
            raise ParameterError(f"domain_length must be positive, got {self.domain_length}")
        if s.min() < 0 or s.max() > length:
            raise DataError(f"locations must lie in [0, {length}]")
        order = np.argsort(s, kind="stable")
        s, x = s[order], x[order]
        s.setflags(write=False)
        x.setflags(write=False)
        object.__setattr__(self, "locations", s)
        object.__setattr__(self, "values", x)
        object.__setattr__(self, "domain_length", length)

    @property
    def n(self) -> int:
        return self.locations.size

    @property
    def sampling_rate(self) -> float:
        return self.n / self.domain_length


def draw_locations(n: int, domain_length: float, seed: int) -> np.ndarray:
    """``n`` i.i.d. uniform positions on ``[0, domain_length]``, sorted."""
    if n < 2:
        raise ParameterError(f"n must be at least 2, got {n}")
    if not domain_length > 0:
        raise ParameterError(f"domain_length must be positive, got {domain_length}")
    rng = rng_for(seed, _LOC_STREAM)
    return np.sort(rng.uniform(0.0, domain_length, size=int(n)))


def covariance_matrix(model: CovarianceModel, locations) -> np.ndarray:
    s = np.asarray(locations, dtype=float)
    return covariance(model, np.abs(s[:, None] - s[None, :]))


def cholesky_factor(sigma: np.ndarray, scale: float) -> np.ndarray:
    """Lower Cholesky factor; one retry with ``1e-10 * scale`` added to the diagonal."""
    try:
        return linalg.cholesky(sigma, lower=True, check_finite=False)
    except linalg.LinAlgError:
        log.warning("covariance matrix not numerically PD; retrying with jitter %.1e", JITTER * scale)
    try:
        return linalg.cholesky(sigma + JITTER * scale * np.eye(sigma.shape[0]),
                               lower=True, check_finite=False)
    except linalg.LinAlgError:
        raise NumericalError("covariance matrix is not positive definite even after jitter",
                             n=sigma.shape[0], jitter=JITTER * scale) from None


def simulate_gp(model: CovarianceModel, locations, seed: int,
                domain_length: float | None = None) -> SampleSet:
    """One draw from ``N(0, Sigma)``, ``Sigma_ij = C(|s_i - s_j|)``."""
    s = np.sort(np.asarray(locations, dtype=float))
    if np.any(np.diff(s) <= 0):
        raise DataError("locations must be pairwise distinct")
    factor = cholesky_factor(covariance_matrix(model, s), model.sigma2)
    z = rng_for(seed, _VALUE_STREAM).standard_normal(s.size)
    length = float(domain_length) if domain_length is not None else float(np.ceil(s.max()))
    return SampleSet(s, factor @ z, length)


def simulate(model: CovarianceModel, n: int, domain_length: float, seed: int) -> SampleSet:
    """Uniform locations plus a GP draw; the design used throughout the benchmark."""
    return simulate_gp(model, draw_locations(n, domain_length, seed), seed, domain_length)
