import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from semispec import _kernels
from semispec.aliasing import SpectralEstimate, assemble
from semispec.decay import DecayEstimate
from semispec.gridize import LagSums
from semispec.spline_spectral import SplineSpectral

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

BACKENDS = ["numpy"] + (["numba"] if _kernels.HAVE_NUMBA else [])


@pytest.fixture(params=BACKENDS)
def backend(request, monkeypatch):
    """Run a test once per kernel implementation."""
    monkeypatch.setenv("SEMISPEC_DISABLE_NUMBA", "1" if request.param == "numpy" else "0")
    assert _kernels.active().name == request.param
    return request.param


def random_lag_sums(rng, k=12, n0=40, decay=0.6):
    """Lag sums resembling a smooth positive covariogram plus noise."""
    n = rng.integers(5, 60, size=k + 1)
    n[0] = n0
    kk = np.arange(k + 1)
    mom = np.exp(-decay * kk) + 0.05 * rng.standard_normal(k + 1)
    mom[0] = 1.0 + abs(mom[0])
    return LagSums(mom * n, n)


def make_spline(rng, k=12, omega_c=math.pi, lam=None):
    ls = random_lag_sums(rng, k)
    lam = float(rng.uniform(0.01, 5.0)) if lam is None else lam
    return SplineSpectral(ls, omega_c, lam)


def make_estimate(rng, k=12, omega_c=math.pi, gamma=None) -> SpectralEstimate:
    sp = make_spline(rng, k, omega_c)
    g = float(rng.uniform(1.2, 2.9)) if gamma is None else gamma
    return assemble(sp, DecayEstimate(g - 1.0, 0.0, 10))


def flat_spline(variance, omega_c=math.pi, k=4):
    """White-noise lag sums: ``S_0 / n_0 = variance`` and ``S_k = 0``."""
    n = np.full(k + 1, 10)
    s = np.zeros(k + 1)
    s[0] = variance * n[0]
    return SplineSpectral(LagSums(s, n), omega_c, 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
