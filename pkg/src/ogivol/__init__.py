"""Overnight GARCH-Ito volatility toolkit."""
from .core import (DEFAULT_LAMBDA, DEFAULT_THETA, Bounds, ConvergenceError, DaySeries, FullTheta,
                   GarchTheta, MarketDay, OgiError, SessionSpec, ValidationError, ValidationReport,
                   VolSeries, mean_recursion_matrix, spectral_norm_2x2, validate_full_theta,
                   validate_garch_theta)
from .estimation import (FitReport, fit_competitor, fit_ogi, residual_variances, sandwich_cov,
                         step1_qmle, wlse, z_statistic)
from .filters import FilterInput, filter_ogi
from .prv import PrvConfig, prv, prv_series
from .simulator import JumpConfig, NoiseConfig, SimConfig, make_observations, simulate
from .theory import aggregate_garch, forecast_multi, forecast_one, map_theta_to_garch

__version__ = "0.1.0"
