"""
Two-step estimation of the reduced GARCH parameters.

Step 1 fits each leg separately by Gaussian QMLE against its proxy (RV for
the session leg, the squared overnight return for the overnight leg).  The
residual variances of step 1 then weight a joint least-squares fit with a
common persistence parameter.  Inference uses the sandwich covariance.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field, asdict
from typing import Callable

import numpy as np
from numba import njit
from scipy.stats import norm

from .core import (Bounds, ConvergenceError, GarchTheta, OgiError,
                   mean_recursion_matrix, spectral_norm_2x2)
from .filters import FilterInput, recursion
from .optim import OptimizerSettings, OptimResult, maximize
from .theory import DEFAULT_CONVENTION, aggregate_garch

log = logging.getLogger(__name__)

MIN_DAYS = 30
PHI_FLOOR = 1e-16


# ---------------------------------------------------------------------------
# leg filters with derivatives

def leg_path(params, inp: FilterInput, h0: float):
    """h (length n) and dh/d(omega, gamma, alpha, beta) (n x 4) for one leg."""
    omega, gamma, alpha, beta = params
    lam = inp.lam
    xr = inp.rv / lam
    xo = inp.ov / (1 - lam)
    hfull = recursion(omega, gamma, alpha * xr + beta * xo, h0)
    n = inp.n
    zero = np.zeros(n)
    d = np.empty((n, 4))
    d[:, 0] = recursion(1.0, gamma, zero, 0.0)[:n]
    d[:, 1] = recursion(0.0, gamma, hfull[:n], 0.0)[:n]
    d[:, 2] = recursion(0.0, gamma, xr, 0.0)[:n]
    d[:, 3] = recursion(0.0, gamma, xo, 0.0)[:n]
    return hfull[:n], d


def _leg_h(params, inp: FilterInput, h0: float) -> np.ndarray:
    omega, gamma, alpha, beta = params
    lam = inp.lam
    return recursion(omega, gamma, alpha / lam * inp.rv + beta / (1 - lam) * inp.ov, h0)[:inp.n]


# compiled kernels for the objectives; same recursion as filters.recursion

@njit(cache=True)
def _qmle_kernel(w, g, a, b, rv, ov, lam, h0, y, c):
    n = rv.size
    h = h0
    tot = 0.0
    ar = a / lam
    bo = b / (1.0 - lam)
    for i in range(n):
        if h <= 0.0:
            return -np.inf
        v = c * h
        tot += np.log(v) + y[i] / v
        h = w + g * h + ar * rv[i] + bo * ov[i]
    return -tot / n


@njit(cache=True)
def _wlse_kernel(x, rv, ov, lam, h0H, h0L, phiH, phiL):
    n = rv.size
    hH = h0H
    hL = h0L
    sH = 0.0
    sL = 0.0
    l1 = 1.0 - lam
    for i in range(n):
        eH = rv[i] - lam * hH
        eL = ov[i] - l1 * hL
        sH += eH * eH
        sL += eL * eL
        r = rv[i] / lam
        o = ov[i] / l1
        hH = x[0] + x[2] * hH + x[3] * r + x[5] * o
        hL = x[1] + x[2] * hL + x[4] * r + x[6] * o
    return -(sH / n / phiH + sL / n / phiL)


# ---------------------------------------------------------------------------
# step 1

def leg_qmle_objective(params, inp: FilterInput, leg: str) -> float:
    y, c, h0 = _leg_setup(inp, leg)
    w, g, a, b = (float(v) for v in params)
    return float(_qmle_kernel(w, g, a, b, inp.rv, inp.ov, inp.lam, h0, y, c))


def leg_qmle_score(params, inp: FilterInput, leg: str) -> np.ndarray:
    y, c, h0 = _leg_setup(inp, leg)
    h, d = leg_path(params, inp, h0)
    w = (c * h - y) / (c * h * h)
    return -(w @ d) / inp.n


def _leg_setup(inp: FilterInput, leg: str):
    if leg == "H":
        return inp.rv, inp.lam, inp.init_H
    if leg == "L":
        return inp.ov, 1 - inp.lam, inp.init_L
    raise ValueError(f"unknown leg {leg!r}")


def _leg_starts(inp: FilterInput, leg: str, bounds: Bounds):
    y, c, _ = _leg_setup(inp, leg)
    lam = inp.lam
    mean_h = np.mean(y) / c
    mr, mo = np.mean(inp.rv) / lam, np.mean(inp.ov) / (1 - lam)
    lo, hi = bounds.leg_arrays()
    out = []
    for g, a, b in ((0.5, 0.15, 0.1), (0.3, 0.3, 0.2), (0.8, 0.05, 0.05)):
        w = mean_h * (1 - g) - a * mr - b * mo
        w = max(w, 0.05 * mean_h * (1 - g))
        x = np.array([w, g, a, b])
        out.append(np.clip(x, lo + 1e-6 * (hi - lo), hi - 1e-6 * (hi - lo)))
    return out


def fit_leg(inp: FilterInput, leg: str, bounds: Bounds | None = None,
            settings: OptimizerSettings | None = None) -> OptimResult:
    bounds = bounds or Bounds()
    lo, hi = bounds.leg_arrays()
    starts = _leg_starts(inp, leg, bounds)
    s = settings or OptimizerSettings()
    s1 = OptimizerSettings(n_starts=len(starts), jitter=0.0, xatol=s.xatol, fatol=s.fatol,
                           maxfev=s.maxfev, polish=s.polish, seed=s.seed)
    return maximize(lambda x: leg_qmle_objective(x, inp, leg), starts[0], lo, hi,
                    grad=lambda x: leg_qmle_score(x, inp, leg),
                    feasible=lambda x: x[1] + x[2] + x[3] < 1.5,
                    settings=s1, extra_starts=starts[1:])


def step1_qmle(inp: FilterInput, bounds: Bounds | None = None,
               settings: OptimizerSettings | None = None, min_days: int = MIN_DAYS):
    """Separate QMLE of (omega, gamma, alpha, beta) for each leg."""
    if inp.n < min_days:
        raise OgiError(f"need at least {min_days} days, got {inp.n}")
    rH = fit_leg(inp, "H", bounds, settings)
    rL = fit_leg(inp, "L", bounds, settings)
    return rH, rL


def residual_variances(inp: FilterInput, thetaH, thetaL) -> tuple[float, float]:
    lam = inp.lam
    hH = _leg_h(thetaH, inp, inp.init_H)
    hL = _leg_h(thetaL, inp, inp.init_L)
    return (float(np.mean((inp.rv - lam * hH) ** 2)),
            float(np.mean((inp.ov - (1 - lam) * hL) ** 2)))


# ---------------------------------------------------------------------------
# step 2

_IDX_H = [0, 2, 3, 5]  # positions of (omega_H, gamma, alpha_H, beta_H) in the 7-vector
_IDX_L = [1, 2, 4, 6]


def wlse_objective(x, inp: FilterInput, phi_H: float, phi_L: float) -> float:
    x = np.asarray(x, dtype=float)
    return float(_wlse_kernel(x, inp.rv, inp.ov, inp.lam, inp.init_H, inp.init_L,
                              float(phi_H), float(phi_L)))


def wlse_scores(x, inp: FilterInput, phi_H: float, phi_L: float) -> np.ndarray:
    """Per-day gradient of the summand -(eH^2/phi_H + eL^2/phi_L); shape (n, 7)."""
    x = np.asarray(x, dtype=float)
    lam = inp.lam
    hH, dH = leg_path(x[_IDX_H], inp, inp.init_H)
    hL, dL = leg_path(x[_IDX_L], inp, inp.init_L)
    eH = inp.rv - lam * hH
    eL = inp.ov - (1 - lam) * hL
    s = np.zeros((inp.n, 7))
    s[:, _IDX_H] += (2 * lam / phi_H * eH)[:, None] * dH
    s[:, _IDX_L] += (2 * (1 - lam) / phi_L * eL)[:, None] * dL
    return s


def wlse_gradient(x, inp: FilterInput, phi_H: float, phi_L: float) -> np.ndarray:
    return wlse_scores(x, inp, phi_H, phi_L).mean(axis=0)


def _check_phi(phi_H, phi_L):
    for name, v in (("phi_H", phi_H), ("phi_L", phi_L)):
        if not np.isfinite(v) or v <= PHI_FLOOR:
            raise OgiError(f"{name}={v!r} is not a usable positive variance")


def _stationary(x) -> bool:
    return spectral_norm_2x2(mean_recursion_matrix(GarchTheta.from_array(x))) < 1.0


def merge_start(thetaH, thetaL, phi_H, phi_L, bounds: Bounds) -> np.ndarray:
    wH, wL = 1.0 / phi_H, 1.0 / phi_L
    g = (wH * thetaH[1] + wL * thetaL[1]) / (wH + wL)
    x = np.array([thetaH[0], thetaL[0], g, thetaH[2], thetaL[2], thetaH[3], thetaL[3]])
    lo, hi = bounds.arrays()
    x = np.clip(x, lo + 1e-4 * (hi - lo), hi - 1e-4 * (hi - lo))
    for _ in range(60):
        if _stationary(x):
            break
        x[[3, 4, 5, 6]] *= 0.9
        x[2] = max(lo[2] + 1e-4 * (hi[2] - lo[2]), x[2] * 0.95)
    return x


def wlse(inp: FilterInput, phi_H: float, phi_L: float, start=None,
         bounds: Bounds | None = None, settings: OptimizerSettings | None = None) -> OptimResult:
    """Maximize the weighted least-squares objective with a common gamma."""
    _check_phi(phi_H, phi_L)
    if np.ptp(inp.rv) == 0 and np.ptp(inp.ov) == 0:
        raise OgiError("singular design: rv and ov are both constant")
    bounds = bounds or Bounds()
    lo, hi = bounds.arrays()
    if start is None:
        start = np.array([np.mean(inp.rv) / inp.lam * 0.3, np.mean(inp.ov) / (1 - inp.lam) * 0.3,
                          0.4, 0.1, 0.1, 0.1, 0.1])
    return maximize(lambda x: wlse_objective(x, inp, phi_H, phi_L), np.asarray(start, dtype=float),
                    lo, hi, grad=lambda x: wlse_gradient(x, inp, phi_H, phi_L),
                    feasible=_stationary, settings=settings)


# ---------------------------------------------------------------------------
# inference

def hessian_of_objective(x, inp, phi_H, phi_L) -> np.ndarray:
    """Central differences of the analytic gradient; step 1e-5 (1 + |x_j|)."""
    x = np.asarray(x, dtype=float)
    k = x.size
    H = np.empty((k, k))
    for j in range(k):
        h = 1e-5 * (1 + abs(x[j]))
        e = np.zeros(k)
        e[j] = h
        H[:, j] = (wlse_gradient(x + e, inp, phi_H, phi_L) - wlse_gradient(x - e, inp, phi_H, phi_L)) / (2 * h)
    return 0.5 * (H + H.T)


def sandwich_cov(inp: FilterInput, theta_g, phi_H: float, phi_L: float,
                 return_parts: bool = False):
    """A^-1 B A^-1 / n with A = -Hessian of the average objective and B the score outer product."""
    x = np.asarray(theta_g.as_array() if isinstance(theta_g, GarchTheta) else theta_g, dtype=float)
    n = inp.n
    A = -hessian_of_objective(x, inp, phi_H, phi_L)
    S = wlse_scores(x, inp, phi_H, phi_L)
    B = S.T @ S / n
    try:
        Ainv = np.linalg.inv(A)
        if not np.all(np.isfinite(Ainv)) or np.linalg.cond(A) > 1e14:
            raise np.linalg.LinAlgError
    except np.linalg.LinAlgError:
        warnings.warn("singular Hessian; using the pseudo-inverse", RuntimeWarning)
        Ainv = np.linalg.pinv(A)
    V = Ainv @ B @ Ainv
    V = 0.5 * (V + V.T)
    cov = V / n
    if return_parts:
        return cov, A, B
    return cov


# aggregate functions of the 7-vector: (omega^g, gamma, alpha^g, beta^g)

def aggregate_vector(x, lam: float, convention: str = DEFAULT_CONVENTION) -> np.ndarray:
    tg = GarchTheta.from_array(x)
    w, a, b = aggregate_garch(tg, lam, convention)
    return np.array([w, tg.gamma, a, b])


def aggregate_jacobian(x, lam: float, convention: str = DEFAULT_CONVENTION) -> np.ndarray:
    J = np.zeros((4, 7))
    J[0, 0], J[0, 1] = lam, 1 - lam
    J[1, 2] = 1.0
    J[2, 3] = lam
    if convention == "main":
        J[2, 4] = 1 - lam
    else:
        J[2, 4] = (1 - lam) * x[2]
        J[2, 2] = (1 - lam) * x[4]
    J[3, 5], J[3, 6] = lam, 1 - lam
    return J


AGGREGATE_NAMES = ("omega_g", "gamma", "alpha_g", "beta_g")


def z_statistic(f_value: float, grad_f, cov, f0: float) -> tuple[float, float]:
    """(f - f0) / sqrt(grad' cov grad) with cov already divided by n; two-sided p."""
    g = np.asarray(grad_f, dtype=float)
    if not np.any(g):
        raise OgiError("zero gradient: the statistic is undefined")
    var = float(g @ np.asarray(cov) @ g)
    if not var > 0:
        raise OgiError("nonpositive delta-method variance")
    T = (f_value - f0) / np.sqrt(var)
    return float(T), float(2 * norm.sf(abs(T)))


# ---------------------------------------------------------------------------
# full fit

@dataclass
class FitReport:
    theta_g_hat: GarchTheta
    thetaH_hat: list[float]
    thetaL_hat: list[float]
    phi_H_hat: float
    phi_L_hat: float
    cov: list[list[float]]
    std_errors: dict[str, float]
    aggregates: dict[str, float]
    aggregate_std_errors: dict[str, float]
    z_stats: dict[str, float]
    objective: float
    n_days: int
    lam: float
    convention: str
    forecast: dict[str, float]
    optimizer: dict = field(default_factory=dict)

    @property
    def converged(self) -> bool:
        return bool(self.optimizer.get("converged", False))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["theta_g_hat"] = asdict(self.theta_g_hat)
        return d


def fit_ogi(inp: FilterInput, bounds: Bounds | None = None,
            settings: OptimizerSettings | None = None,
            convention: str = DEFAULT_CONVENTION, min_days: int = MIN_DAYS,
            with_cov: bool = True) -> FitReport:
    """Step-1 QMLE, residual variances, WLSE and sandwich inference."""
    bounds = bounds or Bounds()
    settings = settings or OptimizerSettings()
    rH, rL = step1_qmle(inp, bounds, settings, min_days)
    phi_H, phi_L = residual_variances(inp, rH.x, rL.x)
    _check_phi(phi_H, phi_L)
    start = merge_start(rH.x, rL.x, phi_H, phi_L, bounds)
    res = wlse(inp, phi_H, phi_L, start, bounds, settings)
    x = res.x
    tg = GarchTheta.from_array(x)
    lam = inp.lam

    names = GarchTheta.names()
    agg = aggregate_vector(x, lam, convention)
    if with_cov:
        cov = sandwich_cov(inp, x, phi_H, phi_L)
        se = np.sqrt(np.clip(np.diag(cov), 0, None))
        J = aggregate_jacobian(x, lam, convention)
        agg_se = np.sqrt(np.clip(np.diag(J @ cov @ J.T), 0, None))
    else:
        cov = np.full((7, 7), np.nan)
        se = np.full(7, np.nan)
        agg_se = np.full(4, np.nan)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(se > 0, x / se, np.nan)

    from .filters import filter_ogi
    vs = filter_ogi(tg, inp, convention)
    return FitReport(
        theta_g_hat=tg,
        thetaH_hat=[float(v) for v in rH.x],
        thetaL_hat=[float(v) for v in rL.x],
        phi_H_hat=phi_H, phi_L_hat=phi_L,
        cov=cov.tolist(),
        std_errors=dict(zip(names, map(float, se))),
        aggregates=dict(zip(AGGREGATE_NAMES, map(float, agg))),
        aggregate_std_errors=dict(zip(AGGREGATE_NAMES, map(float, agg_se))),
        z_stats=dict(zip(names, map(float, z))),
        objective=res.fun,
        n_days=inp.n, lam=lam, convention=convention,
        forecast=dict(hH_next=vs.hH_next, hL_next=vs.hL_next, h_next=vs.h_next),
        optimizer=dict(
            converged=bool(res.converged and rH.converged and rL.converged),
            wlse_converged=bool(res.converged),
            step1_converged=[bool(rH.converged), bool(rL.converged)],
            n_evals=int(res.n_evals + rH.n_evals + rL.n_evals),
            iterations=int(res.n_iter),
            start_objectives=[float(v) for v in res.start_values],
            active_constraints=dict(zip(names, map(bool, res.active))),
            spectral_norm=float(spectral_norm_2x2(mean_recursion_matrix(tg))),
        ),
    )


# ---------------------------------------------------------------------------
# competitor models

MODEL_NAMES = ("ogi", "s-ogi", "a-ogi", "gjr-ogi", "garch", "gjr", "rgarch", "adj-rgarch",
               "har", "loghar", "adj-har", "adj-loghar")
_LOAD_BOX = (1e-6, 0.999)
_LEVERAGE_BOX = (-0.5, 0.999)


@njit(cache=True)
def _design_qmle_kernel(w, g, coef, X, y, h0):
    """-(1/n) sum[log h_i + y_i/h_i] with h_i = w + g h_{i-1} + X_{i-1} . coef."""
    n = y.size
    h = h0
    tot = 0.0
    for i in range(n):
        if h <= 0.0:
            return -np.inf
        tot += np.log(h) + y[i] / h
        inc = 0.0
        for j in range(coef.size):
            inc += X[i, j] * coef[j]
        h = w + g * h + inc
    return -tot / n


def design_path(params, X, h0) -> np.ndarray:
    """h of length n+1 for params (omega, gamma, *coef) and innovation design X."""
    p = np.asarray(params, dtype=float)
    return recursion(p[0], p[1], np.asarray(X, dtype=float) @ p[2:], h0)


@dataclass
class CompetitorFit:
    """Fitted model: parameters, in-sample conditional variance and next-day forecast.

    ``fitted[i]`` is the model's variance for day ``i`` from information up
    to day ``i-1``.  ``return_kind`` names the return the variance refers to
    (``"oo"`` open-to-open, ``"oc"`` open-to-close).
    """

    kind: str
    params: np.ndarray
    objective: float
    converged: bool
    fitted: np.ndarray
    forecast: float
    return_kind: str
    extra: dict = field(default_factory=dict)


def _qmle_design(X, y, h0, starts, lo, hi, settings, feasible=None, fixed=None):
    """Gaussian QMLE over (omega, gamma, *coef) with optional pinned coordinates."""
    X = np.ascontiguousarray(X, dtype=float)
    y = np.ascontiguousarray(y, dtype=float)
    k = lo.size
    fixed = dict(fixed or {})
    free = np.array([j for j in range(k) if j not in fixed], dtype=int)

    def full(z):
        x = np.empty(k)
        x[free] = z
        for j, v in fixed.items():
            x[j] = v
        return x

    def obj(z):
        x = full(z)
        return float(_design_qmle_kernel(x[0], x[1], x[2:].copy(), X, y, h0))

    feas = None if feasible is None else (lambda z: feasible(full(z)))
    s = settings or OptimizerSettings()
    s1 = OptimizerSettings(n_starts=len(starts), jitter=0.0, xatol=s.xatol, fatol=s.fatol,
                           maxfev=s.maxfev, polish=False, seed=s.seed)
    st = [np.clip(np.asarray(v, dtype=float)[free], lo[free] + 1e-6 * (hi - lo)[free],
                  hi[free] - 1e-6 * (hi - lo)[free]) for v in starts]
    res = maximize(obj, st[0], lo[free], hi[free], feasible=feas, settings=s1, extra_starts=st[1:])
    return full(res.x), res


def _garch_starts(mean_y, loads):
    out = []
    for g, a in ((0.5, 0.2), (0.8, 0.1), (0.9, 0.05)):
        w = max(mean_y * (1 - g - a * loads), 0.05 * mean_y * (1 - g))
        out.append(np.array([w, g] + [a] * 1))
    return out


def _box(n_coef, coef_box=_LOAD_BOX):
    lo = np.array([1e-8, 0.01] + [coef_box[0]] * n_coef)
    hi = np.array([10.0, 0.999] + [coef_box[1]] * n_coef)
    return lo, hi


def _fit_garch(inp: FilterInput, asym: bool, settings, fixed=None) -> CompetitorFit:
    r = inp.oo_ret
    y = r * r
    X = np.column_stack([y, y * (r < 0)]) if asym else y[:, None]
    h0 = float(np.var(r, ddof=1))
    lo, hi = _box(X.shape[1])
    base = _garch_starts(float(np.mean(y)), 1.0)
    starts = [np.concatenate([b, [0.05]]) if asym else b for b in base]
    if asym:
        feas = lambda x: x[1] + x[2] + 0.5 * x[3] < 1.0
    else:
        feas = lambda x: x[1] + x[2] < 1.0
    x, res = _qmle_design(X, y, h0, starts, lo, hi, settings, feas, fixed)
    h = design_path(x, X, h0)
    return CompetitorFit("gjr" if asym else "garch", x, res.fun, res.converged,
                         h[:-1], float(h[-1]), "oo")


def _fit_rgarch(inp: FilterInput, settings, fixed=None) -> CompetitorFit:
    y = inp.rv
    X = y[:, None]
    h0 = float(np.mean(y))
    lo, hi = _box(1)
    x, res = _qmle_design(X, y, h0, _garch_starts(float(np.mean(y)), 1.0), lo, hi, settings,
                          fixed=fixed)
    h = design_path(x, X, h0)
    return CompetitorFit("rgarch", x, res.fun, res.converged, h[:-1], float(h[-1]), "oc")


def _a_ogi_design(inp: FilterInput, divisors: str):
    lam = inp.lam
    d_rv, d_ov = (1 - lam, lam) if divisors == "cross" else (lam, 1 - lam)
    return np.column_stack([inp.rv / d_rv, inp.ov / d_ov])


def _fit_a_ogi(inp: FilterInput, settings, divisors="cross", fixed=None) -> CompetitorFit:
    y = inp.rv + inp.ov
    X = _a_ogi_design(inp, divisors)
    h0 = float(np.mean(y))
    lo, hi = _box(2)
    m = float(np.mean(y))
    mx = X.mean(axis=0)
    starts = []
    for g, a, b in ((0.5, 0.1, 0.1), (0.3, 0.2, 0.2), (0.8, 0.05, 0.02)):
        w = max(m * (1 - g) - a * mx[0] - b * mx[1], 0.05 * m * (1 - g))
        starts.append(np.array([w, g, a, b]))
    x, res = _qmle_design(X, y, h0, starts, lo, hi, settings, fixed=fixed)
    h = design_path(x, X, h0)
    return CompetitorFit("a-ogi", x, res.fun, res.converged, h[:-1], float(h[-1]), "oo",
                         dict(divisors=divisors))


def _gjr_ogi_design(inp: FilterInput, c_H: float, c_L: float):
    lam = inp.lam
    r = inp.rv / lam
    o = inp.ov / (1 - lam)
    return np.column_stack([r, o, r * (inp.session_ret < c_H), o * (inp.overnight_ret < c_L)])


def _fit_gjr_ogi(inp: FilterInput, settings) -> CompetitorFit:
    if inp.session_ret is None or inp.overnight_ret is None:
        raise OgiError("GJR-OGI needs signed session and overnight returns")
    y = inp.rv + inp.ov
    lam = inp.lam
    h0 = lam * inp.init_H + (1 - lam) * inp.init_L
    sd_H = float(np.std(inp.session_ret, ddof=1))
    sd_L = float(np.std(inp.overnight_ret, ddof=1))
    lo = np.array([1e-8, 0.01, _LOAD_BOX[0], _LOAD_BOX[0], _LEVERAGE_BOX[0], _LEVERAGE_BOX[0]])
    hi = np.array([10.0, 0.999, _LOAD_BOX[1], _LOAD_BOX[1], _LEVERAGE_BOX[1], _LEVERAGE_BOX[1]])
    m = float(np.mean(y))
    starts = [np.array([0.3 * m, 0.4, 0.2, 0.1, 0.0, 0.0]),
              np.array([0.1 * m, 0.7, 0.1, 0.05, 0.05, 0.05])]
    best = None
    for c_H in (-sd_H, 0.0, sd_H):
        for c_L in (-sd_L, 0.0, sd_L):
            X = _gjr_ogi_design(inp, c_H, c_L)
            x, res = _qmle_design(X, y, h0, starts, lo, hi, settings)
            if best is None or res.fun > best[1]:
                best = (x, res.fun, c_H, c_L, res)
    x6, _, c_H0, c_L0, res0 = best

    # refine all eight coordinates; thresholds enter through indicators only
    lo8 = np.concatenate([lo, [-3 * sd_H, -3 * sd_L]])
    hi8 = np.concatenate([hi, [3 * sd_H, 3 * sd_L]])

    def obj(p):
        X = np.ascontiguousarray(_gjr_ogi_design(inp, p[6], p[7]))
        return float(_design_qmle_kernel(p[0], p[1], p[2:6].copy(), X, y, h0))

    s = settings or OptimizerSettings()
    s1 = OptimizerSettings(n_starts=1, jitter=0.0, xatol=s.xatol, fatol=s.fatol,
                           maxfev=s.maxfev, polish=False, seed=s.seed)
    res = maximize(obj, np.concatenate([x6, [c_H0, c_L0]]), lo8, hi8, settings=s1)
    p = res.x if res.fun >= best[1] else np.concatenate([x6, [c_H0, c_L0]])
    # store in filter_gjr_ogi order: (omega, gamma, alpha, beta, a, b, c_H, c_L)
    X = _gjr_ogi_design(inp, p[6], p[7])
    h = design_path(p[:6], X, h0)
    return CompetitorFit("gjr-ogi", p, max(res.fun, best[1]), bool(res.converged and res0.converged),
                         h[:-1], float(h[-1]), "oo")


def _fit_s_ogi(inp: FilterInput, settings, bounds=None) -> CompetitorFit:
    from .filters import filter_s_ogi
    rH, rL = step1_qmle(inp, bounds, settings)
    vs = filter_s_ogi(rH.x, rL.x, inp)
    return CompetitorFit("s-ogi", np.concatenate([rH.x, rL.x]), rH.fun + rL.fun,
                         bool(rH.converged and rL.converged), vs.h, vs.h_next, "oo",
                         dict(hH_next=vs.hH_next, hL_next=vs.hL_next))


def _fit_ogi_model(inp: FilterInput, settings, bounds=None, convention=DEFAULT_CONVENTION):
    from .filters import filter_ogi
    rep = fit_ogi(inp, bounds, settings, convention, with_cov=False)
    vs = filter_ogi(rep.theta_g_hat, inp, convention)
    return CompetitorFit("ogi", rep.theta_g_hat.as_array(), rep.objective, rep.converged,
                         vs.h, vs.h_next, "oo",
                         dict(hH_next=vs.hH_next, hL_next=vs.hL_next, convention=convention))


def _fit_har_model(inp: FilterInput, log_scale: bool, adjusted: bool) -> CompetitorFit:
    from .filters import HAR_LAGS, adjustment_factor, fit_har
    hf = fit_har(inp.rv, log_scale)
    L = max(HAR_LAGS)
    f = adjustment_factor(inp.rv, inp.ov) if adjusted else 1.0
    # days before the first full lag window carry the in-sample mean
    fitted = np.concatenate([np.full(L, float(np.mean(inp.rv[:L]))), hf.fitted]) * f
    name = ("adj-" if adjusted else "") + ("loghar" if log_scale else "har")
    return CompetitorFit(name, hf.coef, float("nan"), True, fitted, hf.forecast * f,
                         "oo" if adjusted else "oc", dict(resid_var=hf.resid_var, factor=f))


def fit_competitor(kind: str, inp: FilterInput, settings: OptimizerSettings | None = None,
                   fixed: dict | None = None, **kw) -> CompetitorFit:
    """Fit one of ``MODEL_NAMES``.

    GARCH-type models use Gaussian QMLE with the model's own proxy: squared
    open-to-open returns for garch/gjr, RV for rgarch and RV + OV for the
    whole-day OGI variants.  ``fixed`` pins parameter indices to values.
    Adjusted variants scale the variance by ``1 + mean(OV/RV)``.
    """
    from .filters import adjustment_factor
    if inp.n < MIN_DAYS and kind not in ("har", "loghar", "adj-har", "adj-loghar"):
        raise OgiError(f"need at least {MIN_DAYS} days, got {inp.n}")
    if kind == "ogi":
        return _fit_ogi_model(inp, settings, **kw)
    if kind == "s-ogi":
        return _fit_s_ogi(inp, settings, **kw)
    if kind == "a-ogi":
        return _fit_a_ogi(inp, settings, fixed=fixed, **kw)
    if kind == "gjr-ogi":
        return _fit_gjr_ogi(inp, settings)
    if kind in ("garch", "gjr"):
        return _fit_garch(inp, kind == "gjr", settings, fixed)
    if kind in ("rgarch", "adj-rgarch"):
        fit = _fit_rgarch(inp, settings, fixed)
        if kind == "adj-rgarch":
            f = adjustment_factor(inp.rv, inp.ov)
            fit = CompetitorFit("adj-rgarch", fit.params, fit.objective, fit.converged,
                                fit.fitted * f, fit.forecast * f, "oo", dict(factor=f))
        return fit
    if kind in ("har", "loghar", "adj-har", "adj-loghar"):
        return _fit_har_model(inp, "loghar" in kind, kind.startswith("adj-"))
    raise OgiError(f"unknown model {kind!r}; choose from {', '.join(MODEL_NAMES)}")


def refilter(fit: CompetitorFit, inp: FilterInput) -> CompetitorFit:
    """Re-run a fitted model's recursion on new data with the parameters held fixed."""
    from .filters import adjustment_factor, filter_ogi, filter_s_ogi
    k, p = fit.kind, np.asarray(fit.params, dtype=float)
    if k == "ogi":
        vs = filter_ogi(GarchTheta.from_array(p), inp, fit.extra.get("convention", DEFAULT_CONVENTION))
        return CompetitorFit(k, p, fit.objective, fit.converged, vs.h, vs.h_next, "oo", dict(fit.extra))
    if k == "s-ogi":
        vs = filter_s_ogi(p[:4], p[4:], inp)
        return CompetitorFit(k, p, fit.objective, fit.converged, vs.h, vs.h_next, "oo", dict(fit.extra))
    if k in ("garch", "gjr"):
        r = inp.oo_ret
        y = r * r
        X = np.column_stack([y, y * (r < 0)]) if k == "gjr" else y[:, None]
        h = design_path(p, X, float(np.var(r, ddof=1)))
    elif k in ("rgarch", "adj-rgarch"):
        h = design_path(p, inp.rv[:, None], float(np.mean(inp.rv)))
        if k == "adj-rgarch":
            h = h * adjustment_factor(inp.rv, inp.ov)
    elif k == "a-ogi":
        h = design_path(p, _a_ogi_design(inp, fit.extra.get("divisors", "cross")),
                        float(np.mean(inp.rv + inp.ov)))
    elif k == "gjr-ogi":
        lam = inp.lam
        h = design_path(p[:6], _gjr_ogi_design(inp, p[6], p[7]),
                        lam * inp.init_H + (1 - lam) * inp.init_L)
    else:
        return fit_competitor(k, inp)
    return CompetitorFit(k, p, fit.objective, fit.converged, h[:-1], float(h[-1]),
                         fit.return_kind, dict(fit.extra))
