"""Semiparametric spectral density estimation for Gaussian processes observed
at irregular locations on the line.

The estimate combines a smoothing-spline fit of the gridized spectrum below a
cutoff frequency with an algebraic tail whose decay rate comes from a small-lag
variogram regression; the tail's aliased copies are removed below the cutoff.
"""

__version__ = "0.1.0"

from .aliasing import (SpectralEstimate, aliasing_fraction, assemble, eval_yz,  # noqa: E402
                       eval_yz_positive, fit_yz, odd_zeta_sum, yz_covariance)
from .decay import (DecayEstimate, LagSchedule, VariogramTriples,  # noqa: E402
                    default_schedule, empirical_variogram, fit_alpha0, fit_decay)
from .errors import (DataError, EstimationError, NumericalError,  # noqa: E402
                     ParameterError, SemispecError)
from .gridize import GridSpec, LagSums, accumulate_lag_sums, default_cutoff  # noqa: E402
from .kriging import KrigingResult, ipe, krige, prediction_targets  # noqa: E402
from .models import CovarianceModel, covariance, spectral_density, true_variogram  # noqa: E402
from .simulate import SampleSet, draw_locations, simulate, simulate_gp  # noqa: E402
from .spline_spectral import (SplineSpectral, eval_f_delta, fit_hhc,  # noqa: E402
                              hhc_covariance, select_lambda_gcv)

__all__ = [
    "CovarianceModel", "DataError", "DecayEstimate", "EstimationError", "GridSpec",
    "KrigingResult", "LagSchedule", "LagSums", "NumericalError", "ParameterError",
    "SampleSet", "SemispecError", "SpectralEstimate", "SplineSpectral", "VariogramTriples",
    "accumulate_lag_sums", "aliasing_fraction", "assemble", "covariance", "default_cutoff",
    "default_schedule", "draw_locations", "empirical_variogram", "eval_f_delta", "eval_yz",
    "eval_yz_positive", "fit_alpha0", "fit_decay", "fit_hhc", "fit_yz", "hhc_covariance",
    "ipe", "krige", "odd_zeta_sum", "prediction_targets", "select_lambda_gcv", "simulate",
    "simulate_gp", "spectral_density", "true_variogram", "yz_covariance",
]
