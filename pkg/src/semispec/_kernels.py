"""Hot inner loops, each with a numba and a pure-numpy implementation.

The numba path is used when numba imports cleanly and the environment
variable ``SEMISPEC_DISABLE_NUMBA`` is unset (or set to ``0``). Both paths
are always importable as ``numpy_impl`` / ``numba_impl`` so tests and the
benchmark script can compare them.
"""

from __future__ import annotations

import math
import os
from types import SimpleNamespace

import numpy as np

_CHUNK = 2048
# below this distance from a pole k*pi the sinc-pair term is evaluated directly
_POLE_TOL = 1e-4


def _env_disabled() -> bool:
    return os.environ.get("SEMISPEC_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}


# ---------------------------------------------------------------------------
# numpy implementations
# ---------------------------------------------------------------------------
def _np_cell_lag_sums(cells, x, num_cells, max_lag):
    cells = np.asarray(cells, dtype=np.int64)
    x = np.asarray(x, dtype=np.float64)
    y = np.bincount(cells, weights=x, minlength=num_cells)
    sq = np.bincount(cells, weights=x * x, minlength=num_cells)
    cnt = np.bincount(cells, minlength=num_cells).astype(np.int64)
    s = np.zeros(max_lag + 1)
    n = np.zeros(max_lag + 1, dtype=np.int64)
    s[0] = 0.5 * (np.dot(y, y) + sq.sum())
    n[0] = int(np.sum(cnt * (cnt + 1) // 2))
    for k in range(1, min(max_lag, num_cells - 1) + 1):
        s[k] = np.dot(y[:-k], y[k:])
        n[k] = np.dot(cnt[:-k], cnt[k:])
    return s, n


def _np_binned_pair_sums(s, x, lo, hi):
    s = np.asarray(s, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    m = len(lo)
    sums = np.zeros(m)
    counts = np.zeros(m, dtype=np.int64)
    hmax = hi[-1]
    for off in range(1, len(s)):
        d = s[off:] - s[:-off]
        keep = d <= hmax
        if not keep.any():
            break
        d = d[keep]
        z = (x[off:][keep] - x[:-off][keep]) ** 2
        idx = np.searchsorted(lo, d, side="right") - 1
        ok = idx >= 0
        ok[ok] &= d[ok] <= hi[idx[ok]]
        sums += np.bincount(idx[ok], weights=z[ok], minlength=m)
        counts += np.bincount(idx[ok], minlength=m)
    return sums, counts


def _np_cosine_transform(nodes, weighted, h):
    h = np.asarray(h, dtype=np.float64)
    out = np.empty(h.shape[0])
    for start in range(0, h.shape[0], _CHUNK):
        hc = h[start:start + _CHUNK]
        out[start:start + _CHUNK] = np.cos(np.outer(hc, nodes)) @ weighted
    return out


def _np_sinc_pair_series(coef, omega_c, h):
    coef = np.asarray(coef, dtype=np.float64)
    h = np.asarray(h, dtype=np.float64)
    kmax = coef.shape[0]
    kpi = np.pi * np.arange(1, kmax + 1)
    signed = coef * np.where(np.arange(1, kmax + 1) % 2 == 1, 1.0, -1.0)
    out = np.empty(h.shape[0])
    for start in range(0, h.shape[0], _CHUNK):
        xc = omega_c * h[start:start + _CHUNK]
        den = kpi[None, :] ** 2 - xc[:, None] ** 2
        near = np.abs(kpi[None, :] - xc[:, None]) < _POLE_TOL
        den[near] = np.inf
        acc = 2.0 * xc * np.sin(xc) * (signed[None, :] / den).sum(axis=1)
        rows, cols = np.nonzero(near)
        for r, c in zip(rows, cols):
            xv = xc[r]
            y = kpi[c] - xv
            acc[r] += coef[c] * (math.sin(kpi[c] + xv) / (kpi[c] + xv) + _sinc_small(y))
        out[start:start + _CHUNK] = acc
    return out


def _sinc_small(y):
    y2 = y * y
    return 1.0 - y2 / 6.0 + y2 * y2 / 120.0


numpy_impl = SimpleNamespace(
    cell_lag_sums=_np_cell_lag_sums,
    binned_pair_sums=_np_binned_pair_sums,
    cosine_transform=_np_cosine_transform,
    sinc_pair_series=_np_sinc_pair_series,
    name="numpy",
)


# ---------------------------------------------------------------------------
# numba implementations
# ---------------------------------------------------------------------------
def _build_numba():
    import numba
    from numba import njit, prange

    # the bundled TBB is too old on some hosts; the workqueue layer is always available
    numba.config.THREADING_LAYER = os.environ.get("NUMBA_THREADING_LAYER", "workqueue")

    @njit(cache=True)
    def cell_lag_sums(cells, x, num_cells, max_lag):
        y = np.zeros(num_cells)
        sq = np.zeros(num_cells)
        cnt = np.zeros(num_cells, dtype=np.int64)
        for i in range(cells.shape[0]):
            c = cells[i]
            y[c] += x[i]
            sq[c] += x[i] * x[i]
            cnt[c] += 1
        s = np.zeros(max_lag + 1)
        n = np.zeros(max_lag + 1, dtype=np.int64)
        s0 = 0.0
        n0 = 0
        for c in range(num_cells):
            s0 += y[c] * y[c] + sq[c]
            n0 += cnt[c] * (cnt[c] + 1) // 2
        s[0] = 0.5 * s0
        n[0] = n0
        top = min(max_lag, num_cells - 1)
        for k in range(1, top + 1):
            acc = 0.0
            nacc = 0
            for c in range(num_cells - k):
                acc += y[c] * y[c + k]
                nacc += cnt[c] * cnt[c + k]
            s[k] = acc
            n[k] = nacc
        return s, n

    @njit(cache=True)
    def binned_pair_sums(s, x, lo, hi):
        m = lo.shape[0]
        sums = np.zeros(m)
        counts = np.zeros(m, dtype=np.int64)
        hmax = hi[m - 1]
        npts = s.shape[0]
        for i in range(npts):
            for j in range(i + 1, npts):
                d = s[j] - s[i]
                if d > hmax:
                    break
                idx = np.searchsorted(lo, d, side="right") - 1
                if idx >= 0 and d <= hi[idx]:
                    diff = x[j] - x[i]
                    sums[idx] += diff * diff
                    counts[idx] += 1
        return sums, counts

    @njit(cache=True, parallel=True)
    def cosine_transform(nodes, weighted, h):
        out = np.empty(h.shape[0])
        for i in prange(h.shape[0]):
            acc = 0.0
            hi = h[i]
            for j in range(nodes.shape[0]):
                acc += weighted[j] * math.cos(nodes[j] * hi)
            out[i] = acc
        return out

    @njit(cache=True, parallel=True)
    def sinc_pair_series(coef, omega_c, h):
        kmax = coef.shape[0]
        out = np.empty(h.shape[0])
        for i in prange(h.shape[0]):
            x = omega_c * h[i]
            x2 = x * x
            acc = 0.0
            direct = 0.0
            for k in range(1, kmax + 1):
                kpi = math.pi * k
                if abs(kpi - x) < _POLE_TOL:
                    y = kpi - x
                    y2 = y * y
                    direct += coef[k - 1] * (math.sin(kpi + x) / (kpi + x)
                                             + 1.0 - y2 / 6.0 + y2 * y2 / 120.0)
                    continue
                term = coef[k - 1] / (kpi * kpi - x2)
                if k % 2 == 1:
                    acc += term
                else:
                    acc -= term
            out[i] = 2.0 * x * math.sin(x) * acc + direct
        return out

    def _wrap(fn, *casts):
        def call(*args):
            conv = [c(a) for c, a in zip(casts, args)]
            return fn(*conv)
        call.__name__ = fn.__name__
        call.jitted = fn
        return call

    f64 = lambda a: np.ascontiguousarray(a, dtype=np.float64)  # noqa: E731
    i64 = lambda a: np.ascontiguousarray(a, dtype=np.int64)  # noqa: E731
    return SimpleNamespace(
        cell_lag_sums=_wrap(cell_lag_sums, i64, f64, int, int),
        binned_pair_sums=_wrap(binned_pair_sums, f64, f64, f64, f64),
        cosine_transform=_wrap(cosine_transform, f64, f64, f64),
        sinc_pair_series=_wrap(sinc_pair_series, f64, float, f64),
        name="numba",
    )


try:
    numba_impl = _build_numba()
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba_impl = None
    HAVE_NUMBA = False


def active():
    """Return the kernel namespace selected by the environment."""
    if HAVE_NUMBA and not _env_disabled():
        return numba_impl
    return numpy_impl


def cell_lag_sums(cells, x, num_cells, max_lag):
    """Cross-products of per-cell sums at every cell offset up to ``max_lag``.

    Offset 0 counts unordered pairs including each point with itself.
    """
    return active().cell_lag_sums(cells, x, num_cells, max_lag)


def binned_pair_sums(s, x, lo, hi):
    """Sum of squared increments and pair counts over closed distance bins.

    ``s`` must be sorted ascending; the bins ``[lo[m], hi[m]]`` must be sorted
    and pairwise disjoint.
    """
    return active().binned_pair_sums(s, x, np.asarray(lo, float), np.asarray(hi, float))


def cosine_transform(nodes, weighted, h):
    """``out[i] = sum_j weighted[j] * cos(nodes[j] * h[i])``."""
    return active().cosine_transform(nodes, weighted, np.atleast_1d(np.asarray(h, float)))


def sinc_pair_series(coef, omega_c, h):
    """``sum_k coef[k-1] * (sinc(k pi + w h) + sinc(k pi - w h))`` with sinc(t) = sin(t)/t."""
    return active().sinc_pair_series(coef, omega_c, np.atleast_1d(np.asarray(h, float)))
