import math

import numpy as np
import pytest

from semispec import _kernels

pytestmark = pytest.mark.skipif(not _kernels.HAVE_NUMBA, reason="numba unavailable")
NP, NB = _kernels.numpy_impl, _kernels.numba_impl


def test_environment_selects_backend(monkeypatch):
    monkeypatch.setenv("SEMISPEC_DISABLE_NUMBA", "1")
    assert _kernels.active() is NP
    monkeypatch.setenv("SEMISPEC_DISABLE_NUMBA", "0")
    assert _kernels.active() is NB
    monkeypatch.delenv("SEMISPEC_DISABLE_NUMBA")
    assert _kernels.active() is NB


def test_cell_lag_sums_parity(rng):
    cells = rng.integers(0, 300, 1000)
    x = rng.standard_normal(1000)
    s1, n1 = NP.cell_lag_sums(cells, x, 300, 120)
    s2, n2 = NB.cell_lag_sums(cells, x, 300, 120)
    np.testing.assert_array_equal(n1, n2)
    np.testing.assert_allclose(s1, s2, rtol=1e-11, atol=1e-9)


def test_binned_pair_sums_parity(rng):
    s = np.sort(rng.uniform(0, 100, 800))
    x = rng.standard_normal(800)
    lo = np.array([0.05, 0.2, 0.5, 1.0])
    hi = np.array([0.1, 0.4, 0.9, 1.5])
    a, ca = NP.binned_pair_sums(s, x, lo, hi)
    b, cb = NB.binned_pair_sums(s, x, lo, hi)
    np.testing.assert_array_equal(ca, cb)
    np.testing.assert_allclose(a, b, rtol=1e-12)


def test_cosine_transform_parity(rng):
    nodes = rng.uniform(0, 4, 300)
    w = rng.standard_normal(300)
    h = np.linspace(0, 100, 5000)
    np.testing.assert_allclose(NP.cosine_transform(nodes, w, h), NB.cosine_transform(nodes, w, h),
                               rtol=1e-10, atol=1e-10)


def test_sinc_pair_series_parity_and_definition(rng):
    coef = rng.standard_normal(40)
    wc = 1.7
    h = np.r_[np.linspace(0, 80, 3001), np.pi * np.arange(1, 41) / wc]  # includes every pole
    a = NP.sinc_pair_series(coef, wc, h)
    b = NB.sinc_pair_series(coef, wc, h)
    np.testing.assert_allclose(a, b, rtol=1e-10, atol=1e-12)
    k = np.arange(1, 41) * math.pi
    for hv in (0.37, 11.1, 60.0):
        x = wc * hv
        ref = np.sum(coef * (np.sinc((k + x) / math.pi) + np.sinc((k - x) / math.pi)))
        assert NP.sinc_pair_series(coef, wc, np.array([hv]))[0] == pytest.approx(ref, abs=1e-12)
