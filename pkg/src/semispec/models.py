"""Parametric covariance models and their spectral densities.

Spectral densities here are two-sided: ``C(h) = 2 * int_0^inf f(w) cos(w h) dw``.
Covariances are evaluated at nonnegative lags and accept arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate, optimize, special

from .errors import NumericalError, ParameterError

KINDS = ("matern", "spherical", "exponential")


@dataclass(frozen=True)
class CovarianceModel:
    """Isotropic covariance model on the real line.

    Parameters
    ----------
    kind : {"matern", "spherical", "exponential"}
    sigma2 : float
        Variance, ``C(0)``.
    range : float
        Length scale (location units). For the spherical model this is the
        support radius.
    nu : float
        Matern smoothness; ignored for the other kinds.
    """

    kind: str
    sigma2: float = 1.0
    range: float = 1.0
    nu: float = 0.5

    def __post_init__(self):
        kind = str(self.kind).lower()
        object.__setattr__(self, "kind", kind)
        if kind not in KINDS:
            raise ParameterError(f"unknown covariance kind {self.kind!r}; expected one of {KINDS}")
        if not (self.sigma2 > 0 and np.isfinite(self.sigma2)):
            raise ParameterError(f"sigma2 must be positive, got {self.sigma2}")
        if not (self.range > 0 and np.isfinite(self.range)):
            raise ParameterError(f"range must be positive, got {self.range}")
        if kind == "matern" and not (self.nu > 0 and np.isfinite(self.nu)):
            raise ParameterError(f"nu must be positive, got {self.nu}")

    def covariance(self, h):
        return covariance(self, h)

    def spectral_density(self, omega):
        return spectral_density(self, omega)

    def variogram(self, h):
        return true_variogram(self, h)

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "sigma2": float(self.sigma2), "range": float(self.range)}
        if self.kind == "matern":
            d["nu"] = float(self.nu)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "CovarianceModel":
        try:
            return cls(kind=d["kind"], sigma2=float(d.get("sigma2", 1.0)),
                       range=float(d.get("range", 1.0)), nu=float(d.get("nu", 0.5)))
        except KeyError as exc:
            raise ParameterError(f"model specification is missing {exc}") from None


# ---------------------------------------------------------------------------
# Bessel K
# ---------------------------------------------------------------------------
def _half_integer_order(nu: float) -> int | None:
    m = nu - 0.5
    if m >= 0 and abs(m - round(m)) < 1e-12 and round(m) <= 20:
        return int(round(m))
    return None


def bessel_k(nu: float, z):
    """Modified Bessel function of the second kind, ``K_nu(z)`` for ``z > 0``.

    Half-integer orders use the terminating closed form
    ``sqrt(pi / 2z) e^-z sum_j (m+j)! / (j! (m-j)! (2z)^j)``; other orders
    defer to ``scipy.special.kv`` (relative accuracy ~1e-15 across the
    range used here).
    """
    z = np.asarray(z, dtype=float)
    m = _half_integer_order(nu)
    if m is None:
        return special.kv(nu, z)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        poly = np.zeros_like(z)
        for j in range(m + 1):
            c = math.factorial(m + j) / (math.factorial(j) * math.factorial(m - j))
            poly = poly + c / (2.0 * z) ** j
        return np.sqrt(np.pi / (2.0 * z)) * np.exp(-z) * poly


def _matern_corr(u, nu):
    u = np.asarray(u, dtype=float)
    out = np.ones_like(u)
    pos = u > 0
    if np.any(pos):
        up = u[pos]
        m = _half_integer_order(nu)
        if m is not None:
            # u^nu K_nu(u) / (2^(nu-1) Gamma(nu)) reduces to e^-u times a polynomial
            poly = np.zeros_like(up)
            for j in range(m + 1):
                c = (math.factorial(m + j) / (math.factorial(j) * math.factorial(m - j))
                     * 2.0 ** (-j))
                poly = poly + c * up ** (m - j)
            norm = math.sqrt(math.pi) / (2.0 ** (nu - 0.5) * math.gamma(nu))
            val = norm * np.exp(-up) * poly
        else:
            val = np.zeros_like(up)
            near = up < _matern_negligible(float(nu))
            val[near] = _matern_kv(up[near], nu)
        out[pos] = val
    return out


# correlations below this are dropped (set to 0) to skip K_nu evaluations
MATERN_NEGLIGIBLE = 1e-20


def _matern_kv(u, nu):
    with np.errstate(under="ignore"):
        val = (u ** nu) * special.kv(nu, u) / (2.0 ** (nu - 1.0) * special.gamma(nu))
    return np.where(np.isfinite(val), val, 0.0)


@lru_cache(maxsize=256)
def _matern_negligible(nu: float) -> float:
    # the correlation decreases monotonically in u, so one root bracket suffices
    f = lambda u: float(_matern_kv(np.array([u]), nu)[0]) - MATERN_NEGLIGIBLE  # noqa: E731
    hi = 50.0
    while f(hi) > 0:
        hi *= 2.0
    return optimize.brentq(f, 1e-3, hi, xtol=1e-8)


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------
def covariance(model: CovarianceModel, h):
    """Covariance ``C(h)`` at lag(s) ``h >= 0``."""
    h = np.abs(np.asarray(h, dtype=float))
    u = h / model.range
    if model.kind == "exponential":
        c = np.exp(-u)
    elif model.kind == "matern":
        c = _matern_corr(u, model.nu)
    else:
        c = np.where(u < 1.0, 1.0 - 1.5 * u + 0.5 * u ** 3, 0.0)
    out = model.sigma2 * c
    return float(out) if out.ndim == 0 else out


def true_variogram(model: CovarianceModel, h):
    """``2 (C(0) - C(h))``."""
    return 2.0 * (model.sigma2 - np.asarray(covariance(model, h)))


_SPH_SERIES = np.array([
    (-1) ** n / math.factorial(2 * n) * (1.0 / (2 * n + 1) - 1.5 / (2 * n + 2) + 0.5 / (2 * n + 4))
    for n in range(12)
])


def _spherical_unit(t):
    """``int_0^1 cos(t u) (1 - 1.5u + 0.5u^3) du``."""
    t = np.abs(np.asarray(t, dtype=float))
    out = np.empty_like(t)
    small = t < 1.0
    ts = t[small] ** 2
    out[small] = np.polynomial.polynomial.polyval(ts, _SPH_SERIES)
    tl = t[~small]
    out[~small] = 3.0 * (tl ** 2 - 2.0 * tl * np.sin(tl) - 2.0 * np.cos(tl) + 2.0) / (2.0 * tl ** 4)
    return out


def spectral_density(model: CovarianceModel, omega):
    """Two-sided spectral density ``f(w)``, ``w >= 0``."""
    w = np.abs(np.asarray(omega, dtype=float))
    phi = model.range
    if model.kind in ("matern", "exponential"):
        nu = model.nu if model.kind == "matern" else 0.5
        lg = special.gammaln(nu + 0.5) - special.gammaln(nu) - 0.5 * math.log(math.pi)
        out = (model.sigma2 * np.exp(lg) * phi ** (-2.0 * nu)
               * (phi ** -2.0 + w ** 2) ** (-(nu + 0.5)))
    else:
        out = model.sigma2 * phi / math.pi * _spherical_unit(w * phi)
    return float(out) if out.ndim == 0 else out


def spherical_density_quad(model: CovarianceModel, omega: float, tol: float = 1e-12) -> float:
    """Spherical spectral density by adaptive quadrature of ``(1/pi) int_0^phi cos(wh) C(h) dh``."""
    phi = model.range

    def integrand(h):
        u = h / phi
        return model.sigma2 * (1.0 - 1.5 * u + 0.5 * u ** 3)

    if omega == 0:
        val, err = integrate.quad(integrand, 0.0, phi, epsabs=tol, epsrel=tol)
    else:
        val, err = integrate.quad(integrand, 0.0, phi, weight="cos", wvar=omega,
                                  epsabs=tol, epsrel=tol, limit=200)
    if not np.isfinite(val) or err > 1e3 * tol:
        raise NumericalError("spherical spectral quadrature did not converge",
                             omega=omega, estimate=val, error=err)
    return val / math.pi
