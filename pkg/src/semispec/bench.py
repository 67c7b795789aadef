"""Monte Carlo comparison of the spline (HHC), semiparametric (YZ) and
maximum-likelihood Matern estimators.

Each replicate simulates one sample, fits every requested method and scores
it by integrated squared error of the spectral density and the covariance,
and by the squared difference between kriging predictions made with the
estimated and the true covariance. Summaries are medians over replicates;
mIPE is the median over the pooled per-target values.

Spectral densities are compared on the two-sided scale of
:mod:`semispec.models`; the one-sided spline and YZ curves are halved first.
"""

from __future__ import annotations

import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from multiprocessing import get_context

import numpy as np
from scipy import integrate, linalg, optimize
from scipy.spatial.distance import pdist, squareform

from .aliasing import assemble
from .decay import default_schedule, fit_decay, geometric_schedule
from .errors import EstimationError, ParameterError, SemispecError
from .kriging import ipe, krige, prediction_targets
from .models import CovarianceModel
from .simulate import SampleSet, simulate
from .spline_spectral import fit_hhc

log = logging.getLogger(__name__)

METHODS = ("hhc", "yz", "matern")
ISE_F_PANELS = 2048
ISE_C_PANELS = 4096
ISE_C_HMAX = 100.0
THREADS_ENV = "SEMISPEC_THREADS"

MLE_BOUNDS_SIGMA2 = (1e-3, 1e3)
MLE_BOUNDS_NU = (0.1, 5.0)


# ---------------------------------------------------------------------------
# Config and rows
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class ExperimentConfig:
    """One Monte Carlo cell.

    ``domain_length`` defaults to ``n`` (unit sampling rate); ``omega_c``
    of ``None`` means the sampling-rate default; ``h_max`` overrides the
    upper lag of the variogram schedule.
    """

    model: CovarianceModel
    n: int
    replicates: int = 100
    seed: int = 0
    omega_c: float | None = None
    domain_length: float | None = None
    lambda_grid: tuple[float, ...] | None = None
    h_max: float | None = None
    methods: tuple[str, ...] = ("hhc", "yz", "matern")
    n_pred: int = 100
    normalize_ipe: bool = False

    def __post_init__(self):
        if self.replicates < 1:
            raise ParameterError(f"replicates must be >= 1, got {self.replicates}")
        if self.n < 8:
            raise ParameterError(f"n must be >= 8, got {self.n}")
        methods = tuple(str(m).lower() for m in self.methods)
        if not methods:
            raise ParameterError("at least one method is required")
        bad = sorted(set(methods) - set(METHODS))
        if bad:
            raise ParameterError(f"unknown method(s) {bad}; choose from {METHODS}")
        object.__setattr__(self, "methods", tuple(m for m in METHODS if m in methods))
        if self.lambda_grid is not None:
            object.__setattr__(self, "lambda_grid", tuple(float(v) for v in self.lambda_grid))
        if self.omega_c is not None and not self.omega_c > 0:
            raise ParameterError(f"omega_c must be positive, got {self.omega_c}")
        if self.n_pred < 1:
            raise ParameterError(f"n_pred must be >= 1, got {self.n_pred}")

    @property
    def length(self) -> float:
        return float(self.n) if self.domain_length is None else float(self.domain_length)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["model"] = self.model.to_dict()
        d["methods"] = list(self.methods)
        if self.lambda_grid is not None:
            d["lambda_grid"] = list(self.lambda_grid)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f for f in cls.__dataclass_fields__}
        extra = sorted(set(d) - known)
        if extra:
            raise ParameterError(f"unknown config key(s): {extra}")
        if "model" not in d or "n" not in d:
            raise ParameterError("config needs at least 'model' and 'n'")
        kw = dict(d)
        kw["model"] = CovarianceModel.from_dict(d["model"])
        if kw.get("omega_c") in ("auto", None):
            kw["omega_c"] = None
        if "methods" in kw:
            m = kw["methods"]
            kw["methods"] = tuple(m.split(",")) if isinstance(m, str) else tuple(m)
        if kw.get("lambda_grid") is not None:
            kw["lambda_grid"] = tuple(kw["lambda_grid"])
        return cls(**kw)

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            try:
                d = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ParameterError(f"config {path} is not valid JSON: {exc}") from None
        return cls.from_dict(d)


@dataclass
class DetailRow:
    replicate: int
    seed: int
    method: str
    status: str = "ok"
    ise_f: float = math.nan
    ise_c: float = math.nan
    ipe_median: float = math.nan
    jitter: float = math.nan
    info: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ScoreRow:
    method: str
    n: int
    ise_f: float
    ise_c: float
    mipe: float
    replicates: int
    failures: int


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    summary: list[ScoreRow]
    details: list[DetailRow]
    ipe_values: dict[tuple[int, str], np.ndarray]


# ---------------------------------------------------------------------------
# Scores
# ---------------------------------------------------------------------------
def _simpson(fn_a, fn_b, lo, hi, panels):
    x = np.linspace(lo, hi, panels + 1)
    diff = np.asarray(fn_a(x), dtype=float) - np.asarray(fn_b(x), dtype=float)
    return float(integrate.simpson(diff * diff, x=x))


def ise_f(estimate, truth, omega_c: float, panels: int = ISE_F_PANELS) -> float:
    """``int_0^omega_c (f_hat - f)^2`` by composite Simpson.

    Both curves are callables on frequency arrays and must share a
    normalisation.
    """
    return _simpson(estimate, truth, 0.0, omega_c, panels)


def ise_c(estimate, truth, h_max: float = ISE_C_HMAX, panels: int = ISE_C_PANELS) -> float:
    """``int_0^h_max (C_hat - C)^2`` by composite Simpson."""
    return _simpson(estimate, truth, 0.0, h_max, panels)


# ---------------------------------------------------------------------------
# Matern maximum likelihood
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class MaternFit:
    model: CovarianceModel
    loglik: float
    converged: bool
    evaluations: int


def _profile_nll(theta, dist, x, bounds_sigma2):
    # sigma2 is profiled out: for fixed (range, nu) it maximises at x' R^-1 x / n.
    # dist is the condensed (upper-triangle) distance vector
    rng, nu = math.exp(theta[0]), math.exp(theta[1])
    corr = squareform(CovarianceModel("matern", 1.0, rng, nu).covariance(dist))
    np.fill_diagonal(corr, 1.0)
    try:
        fac = linalg.cho_factor(corr, lower=True, check_finite=False)
    except linalg.LinAlgError:
        return math.inf, math.nan
    n = x.size
    quad = float(x @ linalg.cho_solve(fac, x, check_finite=False))
    logdet = 2.0 * float(np.sum(np.log(np.diag(fac[0]))))
    s2 = min(max(quad / n, bounds_sigma2[0]), bounds_sigma2[1])
    nll = 0.5 * (n * math.log(s2) + logdet + quad / s2)
    return nll, s2


def matern_loglik(model: CovarianceModel, sample: SampleSet) -> float:
    """Gaussian log-likelihood (without the ``2 pi`` constant) of ``sample``."""
    s = sample.locations
    sigma = model.covariance(np.abs(s[:, None] - s[None, :]))
    fac = linalg.cho_factor(sigma, lower=True, check_finite=False)
    quad = float(sample.values @ linalg.cho_solve(fac, sample.values, check_finite=False))
    return -0.5 * (2.0 * float(np.sum(np.log(np.diag(fac[0])))) + quad)


def fit_matern_mle(sample: SampleSet, max_evals: int = 600) -> MaternFit:
    """Matern maximum likelihood over ``(sigma2, range, nu)``.

    ``sigma2`` is profiled out in closed form; Nelder-Mead searches
    ``(log range, log nu)`` inside the bounds. The range is bounded by
    ``[0.01, 10]`` times the mean spacing ``L / N``.
    """
    x = sample.values
    if sample.n < 8:
        raise ParameterError(f"MLE needs at least 8 observations, got {sample.n}")
    if float(np.var(x)) <= 0:
        raise EstimationError("sample is constant; Matern likelihood is degenerate")
    spacing = sample.domain_length / sample.n
    lo = np.log([1e-2 * spacing, MLE_BOUNDS_NU[0]])
    hi = np.log([10.0 * spacing, MLE_BOUNDS_NU[1]])
    dist = pdist(sample.locations[:, None])
    fun = lambda th: _profile_nll(th, dist, x, MLE_BOUNDS_SIGMA2)[0]  # noqa: E731
    # the nominal start (range L/10, clipped into the bounds) plus a coarse
    # log-range scan; the best of them seeds the simplex
    nu0 = math.log(0.5)
    starts = [np.array([min(max(math.log(sample.domain_length / 10.0), lo[0]), hi[0]), nu0])]
    starts += [np.array([v, nu0]) for v in np.linspace(lo[0], hi[0], 7)]
    x0 = min(starts, key=fun)
    res = optimize.minimize(fun, x0, method="Nelder-Mead", bounds=list(zip(lo, hi)),
                            options={"xatol": 1e-3, "fatol": 1e-5, "maxfev": max_evals})
    nll, s2 = _profile_nll(res.x, dist, x, MLE_BOUNDS_SIGMA2)
    model = CovarianceModel("matern", s2, math.exp(res.x[0]), math.exp(res.x[1]))
    ok = bool(res.success) and math.isfinite(nll)
    return MaternFit(model, -nll, ok, int(res.nfev))


# ---------------------------------------------------------------------------
# Driver
# ---------------------------------------------------------------------------
def _schedule(config: ExperimentConfig, sample: SampleSet):
    if config.h_max is None:
        return default_schedule(sample)
    return geometric_schedule(config.h_max)


def fit_methods(config: ExperimentConfig, sample: SampleSet, rows: dict[str, DetailRow]):
    """Fit each requested method; returns ``{method: (f_two_sided, covariance)}``.

    Failures are recorded in the matching row's ``status`` and the method is
    left out of the returned mapping.
    """
    omega_c = config.omega_c if config.omega_c is not None else math.pi * sample.sampling_rate
    curves = {}
    spline = None
    if "hhc" in rows or "yz" in rows:
        try:
            spline = fit_hhc(sample, omega_c, config.lambda_grid)
        except SemispecError as exc:
            for m in ("hhc", "yz"):
                if m in rows:
                    rows[m].status = f"fit:{type(exc).__name__}"
    if spline is not None and "hhc" in rows:
        rows["hhc"].info = {"lambda": spline.lam}
        curves["hhc"] = (lambda w: 0.5 * spline(w), spline.covariance)
    if spline is not None and "yz" in rows:
        try:
            decay, _ = fit_decay(sample, _schedule(config, sample))
            est = assemble(spline, decay)
            rows["yz"].info = {"lambda": spline.lam, "gamma": est.gamma,
                               "tail_scale": est.tail_scale, "alpha0_clamped": decay.clamped}
            curves["yz"] = (lambda w: 0.5 * est.positive(w), est.covariance)
        except SemispecError as exc:
            rows["yz"].status = f"fit:{type(exc).__name__}"
    if "matern" in rows:
        try:
            fit = fit_matern_mle(sample)
            rows["matern"].info = {"sigma2": fit.model.sigma2, "range": fit.model.range,
                                   "nu": fit.model.nu, "converged": fit.converged}
            if fit.converged:
                curves["matern"] = (fit.model.spectral_density, fit.model.covariance)
            else:
                rows["matern"].status = "fit:not_converged"
        except SemispecError as exc:
            rows["matern"].status = f"fit:{type(exc).__name__}"
    return curves, omega_c


def run_replicate(config: ExperimentConfig, j: int):
    """Score every method on replicate ``j`` (seed ``config.seed + j``)."""
    seed = config.seed + j
    truth = config.model
    sample = simulate(truth, config.n, config.length, seed)
    targets = prediction_targets(sample.domain_length, config.n_pred)
    ref = krige(sample, truth.covariance, targets, "truth", with_variance=config.normalize_ipe)
    rows = {m: DetailRow(j, seed, m) for m in config.methods}
    curves, omega_c = fit_methods(config, sample, rows)
    ipes = {}
    for m, (f_hat, c_hat) in curves.items():
        row = rows[m]
        row.ise_f = ise_f(f_hat, truth.spectral_density, omega_c)
        row.ise_c = ise_c(c_hat, truth.covariance)
        try:
            pred = krige(sample, c_hat, targets, m)
        except SemispecError as exc:
            row.status = f"krige:{type(exc).__name__}"
            continue
        vals = ipe(pred, ref, normalize=config.normalize_ipe)
        ipes[(j, m)] = vals
        row.ipe_median = float(np.median(vals))
        row.jitter = pred.jitter
    return [rows[m] for m in config.methods], ipes


def replicate_curves(config: ExperimentConfig, j: int = 0, n_freq: int = 513, n_lag: int = 1001):
    """Truth and fitted curves of one replicate on fixed grids, for plotting.

    Returns ``(omega, {name: f}, h, {name: C})`` with ``name`` in
    ``truth`` plus the successfully fitted methods.
    """
    sample = simulate(config.model, config.n, config.length, config.seed + j)
    rows = {m: DetailRow(j, config.seed + j, m) for m in config.methods}
    curves, omega_c = fit_methods(config, sample, rows)
    omega = np.linspace(0.0, 2.0 * omega_c, n_freq)
    h = np.linspace(0.0, 10.0, n_lag)
    f = {"truth": config.model.spectral_density(omega)}
    c = {"truth": config.model.covariance(h)}
    for m, (f_hat, c_hat) in curves.items():
        f[m] = np.asarray(f_hat(omega), dtype=float)
        if m == "hhc":
            # the spline estimate only exists up to the cutoff
            f[m][omega > omega_c] = np.nan
        c[m] = np.asarray(c_hat(h))
    return omega, f, h, c


def _worker_count() -> int:
    raw = os.environ.get(THREADS_ENV, "1").strip()
    try:
        return max(1, int(raw))
    except ValueError:
        raise ParameterError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None


def _median(values) -> float:
    v = np.asarray([x for x in values if math.isfinite(x)], dtype=float)
    return float(np.median(v)) if v.size else math.nan


def summarize(config: ExperimentConfig, details: list[DetailRow],
              ipe_values: dict[tuple[int, str], np.ndarray]) -> list[ScoreRow]:
    """Medians per method; mIPE pools the per-target values of all replicates."""
    out = []
    for m in config.methods:
        rows = [r for r in details if r.method == m]
        pooled = [ipe_values[k] for k in sorted(ipe_values) if k[1] == m]
        mipe = float(np.median(np.concatenate(pooled))) if pooled else math.nan
        out.append(ScoreRow(m, config.n, _median(r.ise_f for r in rows),
                            _median(r.ise_c for r in rows), mipe, len(rows),
                            sum(r.status != "ok" for r in rows)))
    return out


def run_experiment(config: ExperimentConfig, workers: int | None = None) -> ExperimentResult:
    """Run all replicates and summarise.

    Replicate ``j`` uses seed ``config.seed + j``; results are ordered by
    replicate regardless of ``workers`` (default from ``SEMISPEC_THREADS``).
    """
    workers = _worker_count() if workers is None else max(1, int(workers))
    idx = range(config.replicates)
    if workers == 1:
        results = [run_replicate(config, j) for j in idx]
    else:
        with ProcessPoolExecutor(workers, mp_context=get_context("spawn")) as pool:
            results = list(pool.map(run_replicate, [config] * config.replicates, idx))
    details, ipe_values = [], {}
    for rows, ipes in results:
        details.extend(rows)
        ipe_values.update(ipes)
    failed = [r for r in details if r.status != "ok"]
    if failed:
        log.warning("%d method-replicate(s) flagged and excluded from medians", len(failed))
    return ExperimentResult(config, summarize(config, details, ipe_values), details, ipe_values)
