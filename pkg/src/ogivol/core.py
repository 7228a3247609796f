"""
Shared domain types, parameter containers and validation.

Times are day fractions: day ``d`` spans ``[d-1, d]`` and its trading
session is ``[d-1, d-1+lam]``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, fields, astuple
from typing import Sequence

import numpy as np

DEFAULT_LAMBDA = 6.5 / 24


class OgiError(Exception):
    """Base class for errors raised by the toolkit."""


class ValidationError(OgiError, ValueError):
    pass


class ConvergenceError(OgiError):
    pass


@dataclass(frozen=True)
class FullTheta:
    """Structural parameters of the continuous-time process."""

    omega_H1: float
    omega_H2: float
    omega_L: float
    gamma_H: float
    gamma_L: float
    alpha_H: float
    alpha_L: float
    beta_H: float
    beta_L: float
    nu_H: float
    nu_L: float

    def as_array(self) -> np.ndarray:
        return np.array(astuple(self), dtype=float)

    @classmethod
    def from_array(cls, x: Sequence[float]) -> "FullTheta":
        return cls(*(float(v) for v in x))

    @classmethod
    def names(cls) -> tuple[str, ...]:
        return tuple(f.name for f in fields(cls))


@dataclass(frozen=True)
class GarchTheta:
    """Reduced parameters of the two-leg GARCH recursion."""

    omega_Hg: float
    omega_Lg: float
    gamma: float
    alpha_Hg: float
    alpha_Lg: float
    beta_Hg: float
    beta_Lg: float

    def as_array(self) -> np.ndarray:
        return np.array(astuple(self), dtype=float)

    @classmethod
    def from_array(cls, x: Sequence[float]) -> "GarchTheta":
        return cls(*(float(v) for v in x))

    @classmethod
    def names(cls) -> tuple[str, ...]:
        return tuple(f.name for f in fields(cls))

    def leg_H(self) -> np.ndarray:
        return np.array([self.omega_Hg, self.gamma, self.alpha_Hg, self.beta_Hg])

    def leg_L(self) -> np.ndarray:
        return np.array([self.omega_Lg, self.gamma, self.alpha_Lg, self.beta_Lg])


# Simulation design used throughout the tests and examples.
DEFAULT_THETA = FullTheta(0.02, 0.01, 0.01, 0.6, 0.6, 0.4, 0.1, 0.2, 0.1, 0.4, 0.2)


@dataclass(frozen=True)
class SessionSpec:
    lam: float = DEFAULT_LAMBDA

    def __post_init__(self):
        if not (0.0 < self.lam < 1.0):
            raise ValidationError(f"lambda must lie in (0,1), got {self.lam}")


@dataclass(frozen=True)
class Bounds:
    """Box for the reduced parameters (lower, upper) per group."""

    omega: tuple[float, float] = (1e-8, 10.0)
    gamma: tuple[float, float] = (0.01, 0.999)
    alpha: tuple[float, float] = (1e-6, 0.999)
    beta: tuple[float, float] = (1e-6, 0.999)

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Lower and upper vectors in GarchTheta order."""
        groups = [self.omega, self.omega, self.gamma, self.alpha, self.alpha, self.beta, self.beta]
        lo = np.array([g[0] for g in groups], dtype=float)
        hi = np.array([g[1] for g in groups], dtype=float)
        return lo, hi

    def leg_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Lower and upper vectors for a single leg (omega, gamma, alpha, beta)."""
        groups = [self.omega, self.gamma, self.alpha, self.beta]
        return (np.array([g[0] for g in groups], dtype=float),
                np.array([g[1] for g in groups], dtype=float))


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok

    def raise_if_invalid(self, what: str = "parameters"):
        if self.violations:
            raise ValidationError(f"invalid {what}: " + "; ".join(self.violations))


def validate_full_theta(theta: FullTheta) -> ValidationReport:
    out = []
    for name, v in zip(FullTheta.names(), astuple(theta)):
        if not np.isfinite(v):
            out.append(f"{name} is not finite")
    if not (0.0 < theta.alpha_H < 1.0):
        out.append("alpha_H ∉ (0,1)")
    if not (0.0 < theta.beta_L < 1.0):
        out.append("beta_L ∉ (0,1)")
    if not theta.gamma_H > 0.0:
        out.append("gamma_H <= 0")
    if not theta.gamma_L > 0.0:
        out.append("gamma_L <= 0")
    if not theta.gamma_H * theta.gamma_L < 1.0:
        out.append("gamma_H*gamma_L >= 1")
    if theta.nu_H < 0.0:
        out.append("nu_H < 0")
    if theta.nu_L < 0.0:
        out.append("nu_L < 0")
    return ValidationReport(tuple(out))


def spectral_norm_2x2(M) -> float:
    """Largest singular value of a 2x2 matrix, in closed form."""
    M = np.asarray(M, dtype=float)
    if M.shape != (2, 2):
        raise ValidationError("expected a 2x2 matrix")
    if not np.all(np.isfinite(M)):
        raise ValidationError("matrix entries must be finite")
    a, b, c, d = M[0, 0], M[0, 1], M[1, 0], M[1, 1]
    # s_max + s_min and s_max - s_min have these closed forms
    ssum = np.hypot(a + d, b - c)
    sdiff = np.hypot(a - d, b + c)
    smax = 0.5 * (ssum + sdiff)
    return float(smax)


def mean_recursion_matrix(tg: GarchTheta) -> np.ndarray:
    """Matrix M advancing (h^H, h^L) one day under iterated expectations."""
    return np.array([[tg.gamma + tg.alpha_Hg, tg.beta_Hg],
                     [tg.alpha_Lg, tg.gamma + tg.beta_Lg]])


def scaled_stationarity_matrix(tg: GarchTheta, lam: float) -> np.ndarray:
    """The variant with 1/lam and 1/(1-lam) divisors on the loadings."""
    return np.array([[tg.gamma + tg.alpha_Hg / lam, tg.beta_Hg / (1 - lam)],
                     [tg.alpha_Lg / lam, tg.gamma + tg.beta_Lg / (1 - lam)]])


def validate_garch_theta(tg: GarchTheta, bounds: Bounds | None = None,
                         lam: float = DEFAULT_LAMBDA, matrix: str = "M") -> ValidationReport:
    bounds = bounds or Bounds()
    lo, hi = bounds.arrays()
    x = tg.as_array()
    out = []
    for name, v, a, b in zip(GarchTheta.names(), x, lo, hi):
        if not np.isfinite(v):
            out.append(f"{name} is not finite")
        elif not (a < v < b):
            out.append(f"{name} outside ({a:g}, {b:g})")
    if np.all(np.isfinite(x)):
        A = mean_recursion_matrix(tg) if matrix == "M" else scaled_stationarity_matrix(tg, lam)
        nrm = spectral_norm_2x2(A)
        if nrm >= 1.0:
            out.append(f"spectral norm of {matrix} is {nrm:.6g} >= 1")
    return ValidationReport(tuple(out))


@dataclass(frozen=True, eq=False)
class MarketDay:
    day_index: int
    tick_times: np.ndarray
    tick_logprices: np.ndarray
    open_logprice: float
    close_logprice: float

    def __post_init__(self):
        t = np.asarray(self.tick_times, dtype=float)
        y = np.asarray(self.tick_logprices, dtype=float)
        object.__setattr__(self, "tick_times", t)
        object.__setattr__(self, "tick_logprices", y)
        if self.day_index < 1:
            raise ValidationError("day_index must be >= 1")
        if t.ndim != 1 or t.shape != y.shape:
            raise ValidationError(f"day {self.day_index}: times and prices must be 1-d of equal length")
        if t.size < 2:
            raise ValidationError(f"day {self.day_index}: need at least 2 ticks")
        if np.any(np.diff(t) <= 0):
            raise ValidationError(f"day {self.day_index}: tick times must be strictly increasing")

    @property
    def m(self) -> int:
        """Number of tick increments."""
        return self.tick_times.size - 1


@dataclass(frozen=True, eq=False)
class DaySeries:
    """Consecutive market days.

    The overnight after day ``d`` needs the open of day ``d+1``, so a series
    of ``N`` days yields ``N-1`` squared overnight returns.
    """

    days: tuple[MarketDay, ...]

    def __post_init__(self):
        days = tuple(self.days)
        object.__setattr__(self, "days", days)
        idx = [d.day_index for d in days]
        if any(b != a + 1 for a, b in zip(idx, idx[1:])):
            raise ValidationError("day_index values must be consecutive")

    def __len__(self):
        return len(self.days)

    @property
    def open(self) -> np.ndarray:
        return np.array([d.open_logprice for d in self.days])

    @property
    def close(self) -> np.ndarray:
        return np.array([d.close_logprice for d in self.days])

    @property
    def overnight_return(self) -> np.ndarray:
        return self.open[1:] - self.close[:-1]

    @property
    def overnight_return_sq(self) -> np.ndarray:
        return self.overnight_return ** 2

    @property
    def intraday_return(self) -> np.ndarray:
        return self.close - self.open

    @property
    def intraday_return_sq(self) -> np.ndarray:
        return self.intraday_return ** 2


@dataclass(frozen=True, eq=False)
class VolSeries:
    """Filtered conditional volatilities aligned with the inputs.

    ``hH[i]`` is the value for day ``i`` built from data up to day ``i-1``;
    the ``*_next`` fields hold the forecast for the day after the sample.
    """

    rv: np.ndarray
    ov: np.ndarray
    hH: np.ndarray
    hL: np.ndarray
    h: np.ndarray
    hH_next: float
    hL_next: float
    h_next: float
