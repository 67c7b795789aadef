"""Aliasing-corrected semiparametric spectral estimate.

The spline estimate of the gridized density is combined with an algebraic
tail ``tail_scale * (w / omega_c) ** -gamma`` above the cutoff. Below the
cutoff the tail's folded copies are subtracted. The tail amplitude is
fixed by continuity at ``omega_c``.

Normalisation follows :mod:`semispec.spline_spectral` (one-sided): the
covariance is ``int_0^inf f(w) cos(w h) dw``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import optimize, special

from . import _kernels
from .decay import DecayEstimate, LagSchedule, VariogramTriples, fit_decay
from .errors import NumericalError, ParameterError
from .simulate import SampleSet
from .spline_spectral import SplineSpectral, eval_f_delta, fit_hhc, hhc_covariance

log = logging.getLogger(__name__)

_SERIES_SWITCH = 2.0
_LEGENDRE_ORDER = 48


def _check_gamma(gamma):
    if not gamma > 1:
        raise ParameterError(f"decay rate must exceed 1, got {gamma}")


def odd_zeta_sum(gamma: float) -> float:
    """``sum_{j in Z} |1 + 2j|^-gamma = 2 (1 - 2^-gamma) zeta(gamma)``.

    Evaluated as ``2 + 2^(1-gamma) zeta(gamma, 3/2)`` so the leading pair of
    unit terms is exact and the result never rounds below 2.
    """
    _check_gamma(gamma)
    return float(2.0 + 2.0 ** (1.0 - gamma) * special.zeta(gamma, 1.5))


def aliasing_numerator(omega, omega_c: float, gamma: float):
    """``sum_{j != 0} (|w + 2 j w_c| / w_c)^-gamma`` via two Hurwitz zeta values."""
    _check_gamma(gamma)
    x = np.asarray(omega, dtype=float) / omega_c
    if np.any(x < 0) or np.any(x > 1 + 1e-12):
        raise ParameterError("aliasing is defined for 0 <= omega <= omega_c")
    x = np.clip(x, 0.0, 1.0)
    out = 2.0 ** -gamma * (special.zeta(gamma, 1.0 + 0.5 * x) + special.zeta(gamma, 1.0 - 0.5 * x))
    return float(out) if out.ndim == 0 else out


def aliasing_fraction(omega, omega_c: float, gamma: float):
    """Share of the folded tail mass landing at ``omega``; in ``[0, 1)``."""
    return aliasing_numerator(omega, omega_c, gamma) / odd_zeta_sum(gamma)


# ---------------------------------------------------------------------------
# Estimate
# ---------------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class SpectralEstimate:
    spline: SplineSpectral
    decay: DecayEstimate
    tail_scale: float
    tail_clamped: bool = False

    @property
    def gamma(self) -> float:
        return self.decay.gamma

    @property
    def omega_c(self) -> float:
        return self.spline.omega_c

    def __call__(self, omega):
        return eval_yz(self, omega)

    def positive(self, omega):
        return eval_yz_positive(self, omega)

    def covariance(self, h):
        return yz_covariance(self, h)

    def to_dict(self) -> dict:
        return {"spline": self.spline.to_dict(), "decay": self.decay.to_dict(),
                "gamma": self.gamma, "tail_scale": self.tail_scale,
                "tail_clamped": self.tail_clamped, "omega_c": self.omega_c}

    @classmethod
    def from_dict(cls, d: dict) -> "SpectralEstimate":
        return cls(SplineSpectral.from_dict(d["spline"]), DecayEstimate.from_dict(d["decay"]),
                   float(d["tail_scale"]), bool(d.get("tail_clamped", False)))


def assemble(spline: SplineSpectral, decay: DecayEstimate) -> SpectralEstimate:
    """Attach the algebraic tail, scaled for continuity at the cutoff.

    A negative spline value at the cutoff gives a zero tail (flagged).
    """
    edge = float(eval_f_delta(spline, spline.omega_c))
    clamped = edge < 0
    if clamped:
        log.info("spline estimate negative at the cutoff (%.3g); tail set to zero", edge)
    return SpectralEstimate(spline, decay, max(edge, 0.0) / odd_zeta_sum(decay.gamma), clamped)


def eval_yz(est: SpectralEstimate, omega):
    """Semiparametric density at ``omega >= 0`` (may be negative below the cutoff)."""
    w = np.asarray(omega, dtype=float)
    flat = w.ravel()
    if np.any(flat < 0):
        raise ParameterError("frequencies must be nonnegative")
    out = np.empty_like(flat)
    low = flat <= est.omega_c
    if low.any():
        wl = flat[low]
        out[low] = eval_f_delta(est.spline, wl)
        if est.tail_scale > 0:
            out[low] -= est.tail_scale * aliasing_numerator(wl, est.omega_c, est.gamma)
    hi = ~low
    out[hi] = est.tail_scale * (flat[hi] / est.omega_c) ** -est.gamma
    return float(out[0]) if w.ndim == 0 else out.reshape(w.shape)


def eval_yz_closed_form(est: SpectralEstimate, omega):
    """Same estimate written with the aliasing fraction inside the cosine series.

    Agrees with :func:`eval_yz` on ``[0, omega_c]`` unless the tail was clamped.
    """
    w = np.atleast_1d(np.asarray(omega, dtype=float))
    sp = est.spline
    a = aliasing_fraction(w, est.omega_c, est.gamma)
    k = np.arange(1, sp.coef.size + 1)
    cos_k = np.cos(np.outer(w, sp.frequencies))
    series = (cos_k - a[:, None] * np.where(k % 2 == 0, 1.0, -1.0)[None, :]) @ sp.coef
    return ((1.0 - a) * sp.variance + 2.0 * series) / est.omega_c


def eval_yz_positive(est: SpectralEstimate, omega):
    """``max(eval_yz, 0)``."""
    return np.maximum(eval_yz(est, omega), 0.0)


# ---------------------------------------------------------------------------
# Covariance of the estimate
# ---------------------------------------------------------------------------
def _tail_series(x, gamma):
    # G(x) = 1/(g-1) + c_g x^(g-1) - sum_{n>=1} (-1)^n x^(2n) / ((2n)! (2n+1-g))
    c = math.pi / (2.0 * math.gamma(gamma) * math.cos(0.5 * math.pi * gamma))
    x2 = x * x
    acc = np.zeros_like(x)
    term = np.ones_like(x)
    for n in range(1, 30):
        term = term * (-x2) / ((2 * n - 1) * (2 * n))
        acc += term / (2 * n + 1 - gamma)
    return 1.0 / (gamma - 1.0) + c * x ** (gamma - 1.0) - acc


def _upper_gamma_cf(a, z, itmax=500, eps=2e-15):
    # modified Lentz evaluation of the continued fraction for Gamma(a, z);
    # converged elements are retired so slow ones don't hold up the rest
    b = z + 1.0 - a
    tiny = 1e-300
    c = np.full_like(z, 1.0 / tiny)
    d = 1.0 / b
    h = d.copy()
    idx = np.arange(z.size)
    for i in range(1, itmax):
        an = -i * (i - a)
        b = b + 2.0
        d = an * d + b
        d = np.where(np.abs(d) < tiny, tiny, d)
        c = b + an / c
        c = np.where(np.abs(c) < tiny, tiny, c)
        d = 1.0 / d
        step = d * c
        h[idx] *= step
        live = np.abs(step - 1.0) >= eps
        if not live.any():
            break
        idx, b, c, d = idx[live], b[live], c[live], d[live]
    else:
        raise NumericalError("incomplete gamma continued fraction did not converge",
                             a=a, zmin=float(np.min(np.abs(z[idx]))))
    return np.exp(-z + a * np.log(z)) * h


def tail_cosine_integral(x, gamma: float):
    """``G(x) = int_1^inf u^-gamma cos(x u) du`` for ``x >= 0`` and ``1 < gamma < 3``.

    Power series below ``x = 2``; above, ``x^(gamma-1) Re[e^(i pi a/2) Gamma(a, -ix)]``
    with ``a = 1 - gamma`` from the incomplete-gamma continued fraction.
    """
    _check_gamma(gamma)
    if gamma >= 3:
        raise ParameterError(f"tail cosine integral needs gamma < 3, got {gamma}")
    xa = np.abs(np.asarray(x, dtype=float))
    flat = np.atleast_1d(xa)
    out = np.empty_like(flat)
    small = flat < _SERIES_SWITCH
    if small.any():
        out[small] = _tail_series(flat[small], gamma)
    if (~small).any():
        xl = flat[~small]
        a = 1.0 - gamma
        ig = _upper_gamma_cf(a, -1j * xl)
        out[~small] = xl ** (gamma - 1.0) * (np.exp(0.5j * math.pi * a) * ig).real
    return float(out[0]) if xa.ndim == 0 else out.reshape(xa.shape)


@lru_cache(maxsize=64)
def _fold_legendre(gamma: float):
    # Legendre coefficients of B(t) = sum_{j>=1} (2j + t)^-gamma on [-1, 1]
    nodes, weights = np.polynomial.legendre.leggauss(2 * _LEGENDRE_ORDER)
    b = 2.0 ** -gamma * special.zeta(gamma, 1.0 + 0.5 * nodes)
    vander = np.polynomial.legendre.legvander(nodes, _LEGENDRE_ORDER)
    coef = (2 * np.arange(_LEGENDRE_ORDER + 1) + 1) / 2.0 * (vander.T @ (weights * b))
    return coef


def _spherical_jn_table(order: int, x: np.ndarray) -> np.ndarray:
    # rows j_0..j_order; upward recurrence is stable once x exceeds the order
    out = np.empty((order + 1, x.size))
    big = x > order
    if big.any():
        xb = x[big]
        j0 = np.sin(xb) / xb
        j1 = np.sin(xb) / xb ** 2 - np.cos(xb) / xb
        out[0, big], out[1, big] = j0, j1
        for n in range(1, order):
            j0, j1 = j1, (2 * n + 1) / xb * j1 - j0
            out[n + 1, big] = j1
    if (~big).any():
        out[:, ~big] = _miller_jn(order, x[~big])
    return out


def _miller_jn(order: int, x: np.ndarray) -> np.ndarray:
    # downward recurrence from well above the order, then rescaled to the
    # closed form of whichever of j_0, j_1 is larger in magnitude
    rows = np.empty((order + 1, x.size))
    small = x < 1e-3
    if small.any():
        xs = x[small]
        dfact = 1.0
        for n in range(order + 1):
            dfact *= 2 * n + 1
            rows[n, small] = xs ** n / dfact * (1.0 - xs * xs / (2.0 * (2 * n + 3)))
    if small.all():
        return rows
    xl = x[~small]
    sub = np.empty((order + 1, xl.size))
    jp1 = np.zeros_like(xl)
    jn = np.full_like(xl, 1e-250)
    for n in range(order + 60, 0, -1):
        if n <= order:
            sub[n] = jn
        jp1, jn = jn, (2 * n + 1) / xl * jn - jp1
        big = np.abs(jn) > 1e100
        if big.any():
            jn[big] *= 1e-100
            jp1[big] *= 1e-100
            if n <= order:
                sub[n:, big] *= 1e-100
    sub[0] = jn
    j0 = np.sin(xl) / xl
    j1 = np.sin(xl) / xl ** 2 - np.cos(xl) / xl
    use0 = np.abs(j0) >= np.abs(j1)
    scale = np.where(use0, j0 / np.where(use0, sub[0], 1.0), j1 / np.where(use0, 1.0, sub[1]))
    rows[:, ~small] = sub * scale
    return rows


def folded_tail_cosine(x, gamma: float):
    """``int_0^1 A(u) cos(x u) du`` with ``A(u) = sum_{j != 0} |u + 2j|^-gamma``.

    Folding the two halves gives ``int_-1^1 B(t) cos(x t) dt``; with ``B`` in
    Legendre form each even term integrates to ``2 (-1)^(n/2) j_n(x)``.
    """
    _check_gamma(gamma)
    xa = np.abs(np.asarray(x, dtype=float))
    flat = np.atleast_1d(xa).ravel()
    coef = _fold_legendre(float(gamma))
    even = np.arange(0, coef.size, 2)
    signs = np.where(even % 4 == 0, 2.0, -2.0)
    table = _spherical_jn_table(coef.size - 1, flat)
    out = (coef[even] * signs) @ table[even]
    return float(out[0]) if xa.ndim == 0 else out.reshape(xa.shape)


def negative_intervals(est: SpectralEstimate, resolution: int = 8) -> list[tuple[float, float]]:
    """Subintervals of ``[0, omega_c]`` where the estimate is negative."""
    wc = est.omega_c
    m = max(256, resolution * (est.spline.coef.size + 1))
    grid = np.linspace(0.0, wc, m + 1)
    vals = eval_yz(est, grid)
    neg = vals < 0
    if not neg.any():
        return []
    f = lambda w: float(eval_yz(est, w))  # noqa: E731
    out = []
    i = 0
    while i <= m:
        if not neg[i]:
            i += 1
            continue
        j = i
        while j + 1 <= m and neg[j + 1]:
            j += 1
        a = 0.0 if i == 0 else optimize.brentq(f, grid[i - 1], grid[i], xtol=1e-14)
        b = wc if j == m else optimize.brentq(f, grid[j], grid[j + 1], xtol=1e-14)
        out.append((a, b))
        i = j + 1
    return out


def _clip_correction(est: SpectralEstimate, h: np.ndarray) -> np.ndarray:
    # int over the negative intervals of -f(w) cos(w h) dw, added so the total uses max(f, 0)
    intervals = negative_intervals(est)
    if not intervals:
        return np.zeros_like(h)
    hmax = float(h.max()) if h.size else 0.0
    # 8-point rule per panel; panel width keeps the phase change per panel <= 2
    rate = hmax + est.spline.coef.size * math.pi / est.omega_c
    gl_x, gl_w = np.polynomial.legendre.leggauss(8)
    nodes, weights = [], []
    for a, b in intervals:
        panels = max(1, int(math.ceil((b - a) * rate / 2.0)))
        edges = np.linspace(a, b, panels + 1)
        mid = 0.5 * (edges[1:] + edges[:-1])
        half = 0.5 * (edges[1:] - edges[:-1])
        nodes.append((mid[:, None] + half[:, None] * gl_x[None, :]).ravel())
        weights.append((half[:, None] * gl_w[None, :]).ravel())
    nodes = np.concatenate(nodes)
    weights = np.concatenate(weights)
    vals = np.minimum(eval_yz(est, nodes), 0.0)
    return -_kernels.cosine_transform(nodes, weights * vals, h)


def yz_covariance(est: SpectralEstimate, h):
    """``int_0^inf max(f(w), 0) cos(w h) dw`` for the semiparametric estimate.

    Pieces: the closed-form spline covariance; minus the folded tail; plus the
    tail itself, both exact in terms of special functions; plus a quadrature
    over the intervals where the estimate is clipped at zero.
    """
    hh = np.asarray(h, dtype=float)
    flat = np.abs(hh).ravel()
    out = np.asarray(hhc_covariance(est.spline, flat), dtype=float).copy()
    if est.tail_scale > 0:
        x = est.omega_c * flat
        out += est.tail_scale * est.omega_c * (tail_cosine_integral(x, est.gamma)
                                              - folded_tail_cosine(x, est.gamma))
    out += _clip_correction(est, flat)
    if not np.all(np.isfinite(out)):
        raise NumericalError("covariance reconstruction produced non-finite values",
                             gamma=est.gamma, tail_scale=est.tail_scale)
    return float(out[0]) if hh.ndim == 0 else out.reshape(hh.shape)


def fit_yz(sample: SampleSet, omega_c: float | None = None, lambda_grid=None,
           schedule: LagSchedule | None = None, max_lag: int | None = None,
           spline: SplineSpectral | None = None) -> tuple[SpectralEstimate, VariogramTriples]:
    """Spline fit, decay fit and assembly in one call."""
    if spline is None:
        spline = fit_hhc(sample, omega_c, lambda_grid, max_lag)
    decay, triples = fit_decay(sample, schedule)
    return assemble(spline, decay), triples
