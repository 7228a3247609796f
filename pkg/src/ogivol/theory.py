"""
Closed-form structural quantities of the OGI model.

Maps the structural parameters to the reduced two-leg GARCH parameters,
evaluates the conditional variances of the martingale differences, and
produces one- and multi-step volatility forecasts.
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .core import (DEFAULT_LAMBDA, FullTheta, GarchTheta, OgiError,
                   mean_recursion_matrix, spectral_norm_2x2, validate_full_theta)

log = logging.getLogger(__name__)

CONVENTIONS = ("main", "A1c")
DEFAULT_CONVENTION = "main"

_SERIES_TERMS = 30
_GL_X, _GL_W = np.polynomial.legendre.leggauss(48)
_GL_X = 0.5 * (_GL_X + 1.0)
_GL_W = 0.5 * _GL_W


def rho(x: float, k: int) -> float:
    """x^-k (e^x - sum_{j<k} x^j/j!), i.e. sum_j x^j/(j+k)!.

    The power series is used for |x| <= 1 where the closed form cancels
    badly; it is exact to rounding there with 30 terms.
    """
    x = float(x)
    if abs(x) <= 1.0:
        term = 1.0 / math.factorial(k)
        total = term
        for j in range(1, _SERIES_TERMS):
            term *= x / (j + k)
            total += term
        return total
    tail = math.expm1(x) - sum(x ** j / math.factorial(j) for j in range(1, k))
    return tail / x ** k


@dataclass(frozen=True)
class RhoCoefficients:
    rho_H1: float
    rho_H2: float
    rho_H3: float
    rho_H: float
    rho_L1: float
    rho_L2: float
    rho_L3: float
    rho_L: float


def rho_coefficients(theta: FullTheta) -> RhoCoefficients:
    aH, bL = theta.alpha_H, theta.beta_L
    h1, h2, h3 = rho(aH, 1), rho(aH, 2), rho(aH, 3)
    l1, l2, l3 = rho(bL, 1), rho(bL, 2), rho(bL, 3)
    return RhoCoefficients(
        h1, h2, h3, 2 * theta.gamma_H * h3 + h1 - h2,
        l1, l2, l3, (theta.gamma_L - 1) * l2 + l1,
    )


def map_theta_to_garch(theta: FullTheta, lam: float = DEFAULT_LAMBDA) -> GarchTheta:
    """Reduced GARCH parameters implied by the structural parameters."""
    validate_full_theta(theta).raise_if_invalid("FullTheta")
    t = theta
    r = rho_coefficients(t)
    g = t.gamma_H * t.gamma_L

    omega_H = ((1 - g) * (2 * t.omega_H1 * r.rho_H3 - t.omega_H2 * r.rho_H2
                          + t.nu_H * (r.rho_H2 - 2 * r.rho_H3))
               + t.gamma_L * (t.omega_H1 - t.omega_H2) * r.rho_H + t.omega_L * r.rho_H)
    alpha_H = r.rho_H * t.gamma_L * t.alpha_H
    beta_H = r.rho_H * t.beta_L + t.beta_H * (r.rho_H2 - 2 * r.rho_H3)

    # the overnight leg feeds on the session-leg quantities
    c_L = r.rho_L2 - 2 * r.rho_L3
    omega_L = ((1 - g) * (t.omega_L * r.rho_L2 + t.nu_L * c_L)
               + (t.omega_H1 - t.omega_H2 + t.gamma_H * t.omega_L) * r.rho_L
               + r.rho_L * t.alpha_H * omega_H + t.alpha_L * c_L * omega_H)
    alpha_L = (r.rho_L * t.alpha_H + t.alpha_L * c_L) * (g + alpha_H)
    beta_L = r.rho_L * (t.gamma_H * t.beta_L + t.alpha_H * beta_H) + t.alpha_L * c_L * beta_H
    return GarchTheta(omega_H, omega_L, g, alpha_H, alpha_L, beta_H, beta_L)


def aggregate_garch(tg: GarchTheta, lam: float = DEFAULT_LAMBDA,
                    convention: str = DEFAULT_CONVENTION) -> tuple[float, float, float]:
    """Whole-day (omega^g, alpha^g, beta^g).

    ``"main"`` weights the session and overnight loadings by lam and 1-lam,
    which makes h = lam*h^H + (1-lam)*h^L an exact identity of the filters.
    ``"A1c"`` carries an extra factor gamma on the overnight alpha.
    """
    if convention not in CONVENTIONS:
        raise ValueError(f"unknown convention {convention!r}")
    omega = lam * tg.omega_Hg + (1 - lam) * tg.omega_Lg
    if convention == "main":
        alpha = lam * tg.alpha_Hg + (1 - lam) * tg.alpha_Lg
    else:
        alpha = lam * tg.alpha_Hg + (1 - lam) * tg.gamma * tg.alpha_Lg
    beta = lam * tg.beta_Hg + (1 - lam) * tg.beta_Lg
    return omega, alpha, beta


def _fluctuation_factor(a: float) -> float:
    """4 * int_0^1 x g(x)^2 dx with g(x) = ((a y - 1) e^{a y} + 1)/a^2, y = 1-x.

    Equals ((2a^2-8a+9)e^{2a} + (16a-48)e^a + 4a^2+22a+39) / (2 a^6) and
    tends to 1/30 as a -> 0.  g is summed as a power series so the small-a
    regime does not cancel.
    """
    y = 1.0 - _GL_X
    g = np.zeros_like(y)
    term = y * y / 2.0  # j = 2 term of sum (j-1) a^(j-2) y^j / j!
    for j in range(2, 2 + _SERIES_TERMS):
        g += (j - 1) * term
        term = term * a * y / (j + 1)
    return float(4.0 * np.sum(_GL_W * _GL_X * g * g))


def fluctuation_factor_closed(a: float) -> float:
    """Closed form of the same factor; loses precision for small a."""
    big = ((2 * a * a - 8 * a + 9) * math.exp(2 * a) + (16 * a - 48) * math.exp(a)
           + 4 * a * a + 22 * a + 39)
    return big / (2 * a ** 6)


def nu_H_g(theta: FullTheta) -> float:
    return theta.nu_H ** 2 * _fluctuation_factor(theta.alpha_H)


def cond_var_H(theta: FullTheta, lam: float = DEFAULT_LAMBDA) -> float:
    """Conditional variance of IV^H - lam*h^H given the previous day."""
    if not (0.0 < theta.alpha_H < 1.0):
        raise OgiError("alpha_H must lie in (0,1)")
    return lam ** 2 * nu_H_g(theta)


def nu_L_g(theta: FullTheta, lam: float = DEFAULT_LAMBDA) -> float:
    r = rho_coefficients(theta)
    carry = (r.rho_L * theta.beta_H * (1 - lam) / lam) ** 2 + (theta.beta_H / lam) ** 2
    return theta.nu_L ** 2 * _fluctuation_factor(theta.beta_L) + carry * nu_H_g(theta)


def _f_funcs(beta_L: float, lam: float):
    b = beta_L / (1 - lam)

    def f1(t):
        return 1.5 * np.exp(6 * b * (1 - t)) - 0.5 * np.exp(2 * b * (1 - t))

    def f2(t):
        return (1 - lam) / beta_L * np.expm1(b * (t - lam))

    def f3(t):
        # int_lam^t e^{b(t-s)} (s-lam)/(1-lam) ds
        u = b * (t - lam)
        return (1 - lam) / beta_L ** 2 * (np.expm1(u) - u)

    return f1, f2, f3


@dataclass(frozen=True)
class CondVarCoefficients:
    F1: float
    F2: float
    F3: float
    nu_H_g: float
    nu_L_g: float


def f_coefficients(theta: FullTheta, lam: float = DEFAULT_LAMBDA,
                   tol: float = 1e-10) -> tuple[float, float, float]:
    """F_1, F_2, F_3 by adaptive Gauss-Kronrod quadrature over [lam, 1]."""
    if not (0.0 < theta.beta_L < 1.0):
        raise OgiError("beta_L must lie in (0,1)")
    f1, f2, f3 = _f_funcs(theta.beta_L, lam)
    gm1 = theta.gamma_L - 1

    def lin(t):
        return (t - lam) / (1 - lam)

    integrands = (
        lambda t: (1 + lin(t) * gm1) * f1(t) * (f2(t) + gm1 * f3(t)),
        lambda t: (1 + lin(t) * gm1) * f1(t) * f3(t) + lin(t) * f1(t) * (f2(t) + gm1 * f3(t)),
        lambda t: lin(t) * f1(t) * f3(t),
    )
    out = []
    for k, fn in enumerate(integrands, 1):
        with warnings.catch_warnings():
            warnings.simplefilter("error", integrate.IntegrationWarning)
            try:
                val, err = integrate.quad(fn, lam, 1.0, epsabs=tol, epsrel=tol, limit=200)
            except integrate.IntegrationWarning as exc:
                raise OgiError(f"quadrature for F_{k} did not converge: {exc}") from exc
        if not err <= max(tol, tol * abs(val)) * 10:
            raise OgiError(f"quadrature for F_{k} error estimate {err:.3g} above tolerance")
        out.append(4.0 * val)
    return tuple(out)


def cond_var_coefficients(theta: FullTheta, lam: float = DEFAULT_LAMBDA) -> CondVarCoefficients:
    F1, F2, F3 = f_coefficients(theta, lam)
    return CondVarCoefficients(F1, F2, F3, nu_H_g(theta), nu_L_g(theta, lam))


def state_s2(theta: FullTheta, sigma2_close_prev: float, hH: float, ov_prev: float,
             lam: float = DEFAULT_LAMBDA) -> float:
    """Prior-state value s^2 entering the overnight conditional variance."""
    t = theta
    return (t.omega_H1 - t.omega_H2 + t.gamma_H * t.omega_L
            + t.gamma_H * t.gamma_L * sigma2_close_prev + t.beta_H * hH
            + t.gamma_H * t.beta_L / (1 - lam) * ov_prev)


def cond_var_L(theta: FullTheta, s2: float, lam: float = DEFAULT_LAMBDA) -> float:
    """Conditional variance of the squared overnight return innovation."""
    c = cond_var_coefficients(theta, lam)
    return (c.F1 * s2 ** 2 + c.F2 * theta.omega_L * s2 + c.F3 * theta.omega_L ** 2
            + (1 - lam) ** 2 * c.nu_L_g)


def forecast_one(tg: GarchTheta, h_n: float, rv_n: float, ov_n: float,
                 lam: float = DEFAULT_LAMBDA, convention: str = DEFAULT_CONVENTION) -> float:
    omega, alpha, beta = aggregate_garch(tg, lam, convention)
    return omega + tg.gamma * h_n + alpha / lam * rv_n + beta / (1 - lam) * ov_n


def fixed_point(tg: GarchTheta, lam: float = DEFAULT_LAMBDA,
                convention: str = DEFAULT_CONVENTION) -> tuple[float, float, float]:
    """Long-run (h^H, h^L, h) implied by the mean recursion."""
    M = mean_recursion_matrix(tg)
    hH, hL = np.linalg.solve(np.eye(2) - M, [tg.omega_Hg, tg.omega_Lg])
    omega, alpha, beta = aggregate_garch(tg, lam, convention)
    h = (omega + alpha * hH + beta * hL) / (1 - tg.gamma)
    return float(hH), float(hL), float(h)


@dataclass(frozen=True)
class MultiForecast:
    h: np.ndarray
    hH: np.ndarray
    hL: np.ndarray
    diverging: bool


def forecast_multi(tg: GarchTheta, hH_n: float, hL_n: float, h_n: float, k: int,
                   rv_n: float | None = None, ov_n: float | None = None,
                   lam: float = DEFAULT_LAMBDA,
                   convention: str = DEFAULT_CONVENTION) -> MultiForecast:
    """Forecasts for days n+1..n+k.

    The first step uses the observed innovations (their conditional means
    lam*hH_n and (1-lam)*hL_n when not given); later steps iterate the
    conditional expectations.
    """
    if k < 1:
        raise ValueError("horizon must be >= 1")
    rv_n = lam * hH_n if rv_n is None else rv_n
    ov_n = (1 - lam) * hL_n if ov_n is None else ov_n
    omega, alpha, beta = aggregate_garch(tg, lam, convention)
    M = mean_recursion_matrix(tg)
    diverging = spectral_norm_2x2(M) >= 1.0
    if diverging:
        log.warning("mean-recursion matrix has spectral norm >= 1; forecasts may diverge")

    h = np.empty(k)
    hH = np.empty(k)
    hL = np.empty(k)
    h[0] = omega + tg.gamma * h_n + alpha / lam * rv_n + beta / (1 - lam) * ov_n
    hH[0] = tg.omega_Hg + tg.gamma * hH_n + tg.alpha_Hg / lam * rv_n + tg.beta_Hg / (1 - lam) * ov_n
    hL[0] = tg.omega_Lg + tg.gamma * hL_n + tg.alpha_Lg / lam * rv_n + tg.beta_Lg / (1 - lam) * ov_n
    for j in range(1, k):
        h[j] = omega + tg.gamma * h[j - 1] + alpha * hH[j - 1] + beta * hL[j - 1]
        hH[j] = tg.omega_Hg + M[0, 0] * hH[j - 1] + M[0, 1] * hL[j - 1]
        hL[j] = tg.omega_Lg + M[1, 0] * hH[j - 1] + M[1, 1] * hL[j - 1]
    return MultiForecast(h, hH, hL, diverging)
