"""Gaussian semiparametric estimation of multivariate long memory."""

from .errors import EstimationError, InputError, LongmemError, MonteCarloError, NumericalError
from .gse import GseFit, ParamSpace, bandwidth, estimate
from .inference import AsymptoticCov, WaldTest, chi2_sf, omega, wald_test
from .spectral import (FrequencyGrid, MultiSeries, SpectralEstimate, Taper, WeightScheme,
                       bartlett_weights, fourier_grid, periodogram, smoothed_periodogram,
                       tapered_periodogram)
from .varfima import VarfimaSpec, simulate

__version__ = "0.1.0"
