"""
Conditional-volatility recursions for the OGI family and competitor models.

Alignment convention: index ``i`` of every input array refers to day
``i+1``.  ``rv[i]`` is that day's session realized variance, ``ov[i]`` the
squared return from its close to the next open, and ``oo_ret[i]`` the
open-to-open return over the day.  A filtered value ``h[i]`` uses data up
to day ``i`` only; ``h[0]`` is the initial value.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from .core import DEFAULT_LAMBDA, GarchTheta, OgiError, VolSeries
from .theory import DEFAULT_CONVENTION, aggregate_garch

log = logging.getLogger(__name__)

EPS_FLOOR = 1e-12
HAR_LAGS = (1, 5, 22)


@dataclass(frozen=True, eq=False)
class FilterInput:
    rv: np.ndarray
    ov: np.ndarray
    lam: float = DEFAULT_LAMBDA
    h0H: float | None = None
    h0L: float | None = None
    session_ret: np.ndarray | None = None
    overnight_ret: np.ndarray | None = None

    def __post_init__(self):
        rv = np.asarray(self.rv, dtype=float)
        ov = np.asarray(self.ov, dtype=float)
        object.__setattr__(self, "rv", rv)
        object.__setattr__(self, "ov", ov)
        if rv.ndim != 1 or rv.shape != ov.shape:
            raise OgiError("rv and ov must be 1-d arrays of equal length")
        if rv.size == 0:
            raise OgiError("empty input")
        if np.any(rv < 0) or np.any(ov < 0) or not (np.all(np.isfinite(rv)) and np.all(np.isfinite(ov))):
            raise OgiError("rv and ov must be finite and nonnegative")
        for name in ("session_ret", "overnight_ret"):
            v = getattr(self, name)
            if v is not None:
                v = np.asarray(v, dtype=float)
                if v.shape != rv.shape:
                    raise OgiError(f"{name} must align with rv")
                object.__setattr__(self, name, v)

    @property
    def n(self) -> int:
        return self.rv.size

    @property
    def init_H(self) -> float:
        return float(self.rv[0]) if self.h0H is None else float(self.h0H)

    @property
    def init_L(self) -> float:
        if self.h0L is not None:
            return float(self.h0L)
        if self.overnight_ret is not None and self.n > 1:
            return float(np.var(self.overnight_ret, ddof=1))
        return float(np.mean(self.ov))

    @property
    def oo_ret(self) -> np.ndarray:
        if self.session_ret is None or self.overnight_ret is None:
            raise OgiError("signed session and overnight returns are required")
        return self.session_ret + self.overnight_ret

    @classmethod
    def from_prices(cls, rv, open_lp, close_lp, next_open: float | None = None,
                    lam: float = DEFAULT_LAMBDA) -> "FilterInput":
        """Build from daily open/close log-prices.

        Without ``next_open`` the last day has no overnight return and is
        dropped, so ``N`` days give ``N-1`` rows.
        """
        o = np.asarray(open_lp, dtype=float)
        c = np.asarray(close_lp, dtype=float)
        rv = np.asarray(rv, dtype=float)
        if not (o.shape == c.shape == rv.shape):
            raise OgiError("rv, open and close must align")
        nxt = o[1:] if next_open is None else np.append(o[1:], float(next_open))
        k = nxt.size
        ovr = nxt - c[:k]
        return cls(rv[:k], ovr * ovr, lam, session_ret=(c - o)[:k], overnight_ret=ovr)

    def slice(self, start: int, stop: int) -> "FilterInput":
        """Sub-window with the default initial values recomputed."""
        sr = None if self.session_ret is None else self.session_ret[start:stop]
        orr = None if self.overnight_ret is None else self.overnight_ret[start:stop]
        return FilterInput(self.rv[start:stop], self.ov[start:stop], self.lam,
                           session_ret=sr, overnight_ret=orr)


def recursion(omega: float, gamma: float, innov: np.ndarray, h0: float) -> np.ndarray:
    """h[0] = h0 and h[i] = omega + gamma*h[i-1] + innov[i-1]; length n+1."""
    x = omega + np.asarray(innov, dtype=float)
    y, _ = lfilter([1.0], [1.0, -gamma], x, zi=[gamma * h0])
    return np.concatenate(([h0], y))


def ogi_legs(tg: GarchTheta, rv, ov, lam: float, h0H: float, h0L: float):
    """Session and overnight legs; returns (hH, hL) of length n+1 each."""
    rv = np.asarray(rv, dtype=float)
    ov = np.asarray(ov, dtype=float)
    hH = recursion(tg.omega_Hg, tg.gamma, tg.alpha_Hg / lam * rv + tg.beta_Hg / (1 - lam) * ov, h0H)
    hL = recursion(tg.omega_Lg, tg.gamma, tg.alpha_Lg / lam * rv + tg.beta_Lg / (1 - lam) * ov, h0L)
    return hH, hL


def _whole_day(omega, gamma, load_rv, load_ov, inp: FilterInput, h0):
    return recursion(omega, gamma, load_rv * inp.rv + load_ov * inp.ov, h0)


def filter_ogi(tg: GarchTheta, inp: FilterInput, convention: str = DEFAULT_CONVENTION) -> VolSeries:
    lam = inp.lam
    h0H, h0L = inp.init_H, inp.init_L
    hH, hL = ogi_legs(tg, inp.rv, inp.ov, lam, h0H, h0L)
    omega, alpha, beta = aggregate_garch(tg, lam, convention)
    h = _whole_day(omega, tg.gamma, alpha / lam, beta / (1 - lam), inp, lam * h0H + (1 - lam) * h0L)
    return VolSeries(inp.rv, inp.ov, hH[:-1], hL[:-1], h[:-1],
                     float(hH[-1]), float(hL[-1]), float(h[-1]))


def filter_s_ogi(thetaH, thetaL, inp: FilterInput) -> VolSeries:
    """Legs with their own persistence; each theta is (omega, gamma, alpha, beta)."""
    lam = inp.lam
    wH, gH, aH, bH = (float(v) for v in thetaH)
    wL, gL, aL, bL = (float(v) for v in thetaL)
    hH = recursion(wH, gH, aH / lam * inp.rv + bH / (1 - lam) * inp.ov, inp.init_H)
    hL = recursion(wL, gL, aL / lam * inp.rv + bL / (1 - lam) * inp.ov, inp.init_L)
    h = lam * hH + (1 - lam) * hL
    return VolSeries(inp.rv, inp.ov, hH[:-1], hL[:-1], h[:-1],
                     float(hH[-1]), float(hL[-1]), float(h[-1]))


def filter_a_ogi(params, inp: FilterInput, divisors: str = "cross",
                 h0: float | None = None) -> np.ndarray:
    """Single whole-day recursion fitted to RV + OV; returns h of length n+1.

    ``divisors="cross"`` divides RV by 1-lam and OV by lam;
    ``"matched"`` uses lam on RV and 1-lam on OV.
    """
    omega, gamma, alpha, beta = (float(v) for v in params)
    lam = inp.lam
    if divisors == "cross":
        d_rv, d_ov = 1 - lam, lam
    elif divisors == "matched":
        d_rv, d_ov = lam, 1 - lam
    else:
        raise ValueError(f"unknown divisor convention {divisors!r}")
    h0 = float(np.mean(inp.rv + inp.ov)) if h0 is None else h0
    return _whole_day(omega, gamma, alpha / d_rv, beta / d_ov, inp, h0)


def filter_gjr_ogi(params, inp: FilterInput, h0: float | None = None) -> np.ndarray:
    """Whole-day OGI recursion with threshold terms on signed returns.

    ``params = (omega, gamma, alpha, beta, a, b, c_H, c_L)``; the RV loading
    is ``alpha + a*1{session return < c_H}`` and the OV loading
    ``beta + b*1{overnight return < c_L}``.  Returns h of length n+1.
    """
    omega, gamma, alpha, beta, a, b, c_H, c_L = (float(v) for v in params)
    if inp.session_ret is None or inp.overnight_ret is None:
        raise OgiError("GJR-OGI needs signed session and overnight returns")
    lam = inp.lam
    ind_H = (inp.session_ret < c_H).astype(float)
    ind_L = (inp.overnight_ret < c_L).astype(float)
    h0 = lam * inp.init_H + (1 - lam) * inp.init_L if h0 is None else h0
    return _whole_day(omega, gamma, (alpha + a * ind_H) / lam, (beta + b * ind_L) / (1 - lam), inp, h0)


def ogi_whole_day(params, inp: FilterInput, h0: float | None = None) -> np.ndarray:
    """Whole-day OGI recursion from aggregate (omega, gamma, alpha, beta)."""
    omega, gamma, alpha, beta = (float(v) for v in params)
    lam = inp.lam
    h0 = lam * inp.init_H + (1 - lam) * inp.init_L if h0 is None else h0
    return _whole_day(omega, gamma, alpha / lam, beta / (1 - lam), inp, h0)


def filter_garch11(params, oo_ret, h0: float | None = None) -> np.ndarray:
    omega, gamma, beta = (float(v) for v in params)
    r = np.asarray(oo_ret, dtype=float)
    if r.size == 0:
        raise OgiError("empty input")
    h0 = float(np.var(r, ddof=1)) if (h0 is None and r.size > 1) else (float(r[0] ** 2) if h0 is None else h0)
    return recursion(omega, gamma, beta * r * r, h0)


def filter_gjr11(params, oo_ret, h0: float | None = None) -> np.ndarray:
    omega, gamma, beta, beta_neg = (float(v) for v in params)
    r = np.asarray(oo_ret, dtype=float)
    if r.size == 0:
        raise OgiError("empty input")
    h0 = float(np.var(r, ddof=1)) if (h0 is None and r.size > 1) else (float(r[0] ** 2) if h0 is None else h0)
    return recursion(omega, gamma, (beta + beta_neg * (r < 0)) * r * r, h0)


def filter_realized_garch(params, rv, h0: float | None = None) -> np.ndarray:
    omega, gamma, alpha = (float(v) for v in params)
    rv = np.asarray(rv, dtype=float)
    if rv.size == 0:
        raise OgiError("empty input")
    h0 = float(np.mean(rv)) if h0 is None else h0
    return recursion(omega, gamma, alpha * rv, h0)


def adjustment_factor(rv, ov) -> float:
    """1 + mean(OV/RV) over days with positive RV."""
    rv = np.asarray(rv, dtype=float)
    ov = np.asarray(ov, dtype=float)
    ok = rv > 0
    if not np.all(ok):
        log.info("adjustment factor: %d zero-RV days excluded", int((~ok).sum()))
    if not np.any(ok):
        return 1.0
    return 1.0 + float(np.mean(ov[ok] / rv[ok]))


def har_design(x: np.ndarray, lags=HAR_LAGS):
    """Regressor matrix for targets x[L:], plus the row for the next day."""
    x = np.asarray(x, dtype=float)
    L = max(lags)
    n = x.size
    if n < L + 1:
        raise OgiError(f"HAR needs at least {L + 1} observations, got {n}")
    c = np.concatenate(([0.0], np.cumsum(x)))
    rows = []
    for t in range(L, n + 1):
        rows.append([1.0] + [(c[t] - c[t - k]) / k for k in lags])
    X = np.array(rows)
    return X[:-1], x[L:], X[-1]


@dataclass(frozen=True, eq=False)
class HarFit:
    coef: np.ndarray
    fitted: np.ndarray  # in-sample fitted values for days L+1..n
    forecast: float
    resid_var: float
    log: bool


def fit_har(rv, log_scale: bool = False, lags=HAR_LAGS) -> HarFit:
    """OLS HAR regression; the log variant is bias-corrected by exp(s^2/2)."""
    rv = np.asarray(rv, dtype=float)
    x = np.log(np.maximum(rv, EPS_FLOOR)) if log_scale else rv
    X, y, x_next = har_design(x, lags)
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    fit = X @ coef
    resid = y - fit
    dof = max(y.size - X.shape[1], 1)
    s2 = float(resid @ resid) / dof
    pred = float(x_next @ coef)
    if log_scale:
        corr = np.exp(s2 / 2)
        fitted = np.exp(fit) * corr
        forecast = float(np.exp(pred) * corr)
    else:
        fitted = fit
        forecast = pred
    if forecast < EPS_FLOOR:
        log.warning("HAR forecast %.3g floored at %.1g", forecast, EPS_FLOOR)
        forecast = EPS_FLOOR
    fitted = np.maximum(fitted, EPS_FLOOR)
    return HarFit(coef, fitted, forecast, s2, log_scale)
