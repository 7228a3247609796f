"""Forecast losses, forecast comparison, VaR backtests and utility metrics."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import xlogy
from scipy.stats import chi2, norm

from .core import OgiError

Q0_LEVELS = (0.01, 0.02, 0.05, 0.1, 0.2)
XI_LEVELS = (2.5, 5.0)
ACF_LAGS = 30


def _aligned(a, b, what="series"):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise OgiError(f"{what} must be 1-d and of equal length")
    if a.size == 0:
        raise OgiError(f"{what} are empty")
    return a, b


def squared_errors(vol, realized) -> np.ndarray:
    v, r = _aligned(vol, realized)
    return (v - r) ** 2


def qlike_terms(vol, realized) -> np.ndarray:
    v, r = _aligned(vol, realized)
    if np.any(v <= 0):
        raise OgiError("QLIKE needs positive forecasts")
    return np.log(v) + r / v


def mspe(vol, realized) -> float:
    return float(np.mean(squared_errors(vol, realized)))


def qlike(vol, realized) -> float:
    return float(np.mean(qlike_terms(vol, realized)))


def bartlett_lrv(d, lag: int) -> float:
    """Long-run variance of d with Bartlett weights 1 - j/(lag+1)."""
    d = np.asarray(d, dtype=float)
    u = d - d.mean()
    n = u.size
    s = float(u @ u) / n
    for j in range(1, lag + 1):
        s += 2 * (1 - j / (lag + 1)) * float(u[j:] @ u[:-j]) / n
    return s


def dm_test(loss_a, loss_b, hac_lag: int | None = None) -> tuple[float, float]:
    """Diebold-Mariano statistic for mean(loss_a - loss_b); negative favours a."""
    a, b = _aligned(loss_a, loss_b, "loss series")
    if a.size < 10:
        raise OgiError("DM test needs at least 10 observations")
    d = a - b
    n = d.size
    lag = int(np.floor(n ** (1 / 3))) if hac_lag is None else int(hac_lag)
    lrv = bartlett_lrv(d, lag)
    if not lrv > 0 or np.ptp(d) == 0:
        raise OgiError("identical losses: the DM statistic is undefined")
    stat = float(d.mean() / np.sqrt(lrv / n))
    return stat, float(2 * norm.sf(abs(stat)))


def _check_q0(q0):
    if not 0 < q0 <= 0.5:
        raise OgiError(f"q0={q0} must lie in (0, 0.5]")


def standardized_quantile(returns, fitted_vol, q0: float, min_n: int = 100) -> float:
    r, v = _aligned(returns, fitted_vol, "returns and fitted vol")
    _check_q0(q0)
    if r.size < min_n:
        raise OgiError(f"need at least {min_n} in-sample returns, got {r.size}")
    if np.any(v <= 0):
        raise OgiError("fitted volatilities must be positive")
    return float(np.quantile(r / np.sqrt(v), q0, method="linear"))


def var_forecast(in_sample_returns, in_sample_fitted_vol, out_vol_forecast: float, q0: float,
                 min_n: int = 100) -> float:
    """Empirical q0-quantile of standardized in-sample returns times sqrt(forecast)."""
    if not out_vol_forecast > 0:
        raise OgiError("variance forecast must be positive")
    q = standardized_quantile(in_sample_returns, in_sample_fitted_vol, q0, min_n)
    return q * float(np.sqrt(out_vol_forecast))


def hits(returns, var_values) -> np.ndarray:
    r, v = _aligned(returns, var_values)
    return (r < v).astype(int)


@dataclass(frozen=True)
class CoverageResult:
    stat: float
    p_value: float
    corrected: bool = False


def _hits_array(h, min_n=50):
    h = np.asarray(h)
    if h.ndim != 1 or not np.all((h == 0) | (h == 1)):
        raise OgiError("hits must be a 0/1 series")
    if h.size < min_n:
        raise OgiError(f"need at least {min_n} hits, got {h.size}")
    return h.astype(int)


def lruc(h, q0: float, min_n: int = 50) -> CoverageResult:
    """Unconditional coverage LR; x=0 or x=n uses x±0.5 and sets ``corrected``."""
    h = _hits_array(h, min_n)
    _check_q0(q0)
    n = h.size
    x = float(h.sum())
    corrected = x == 0 or x == n
    if x == 0:
        x = 0.5
    elif x == n:
        x = n - 0.5
    pi = x / n
    ll0 = (n - x) * np.log1p(-q0) + x * np.log(q0)
    ll1 = (n - x) * np.log1p(-pi) + x * np.log(pi)
    stat = max(float(-2 * (ll0 - ll1)), 0.0)
    return CoverageResult(stat, float(chi2.sf(stat, 1)), corrected)


def transition_counts(h) -> tuple[int, int, int, int]:
    a, b = h[:-1], h[1:]
    return (int(np.sum((a == 0) & (b == 0))), int(np.sum((a == 0) & (b == 1))),
            int(np.sum((a == 1) & (b == 0))), int(np.sum((a == 1) & (b == 1))))


def lrind(h, min_n: int = 50) -> CoverageResult:
    """First-order Markov independence LR (0 log 0 taken as 0)."""
    h = _hits_array(h, min_n)
    n00, n01, n10, n11 = transition_counts(h)
    p01 = n01 / (n00 + n01) if n00 + n01 else 0.0
    p11 = n11 / (n10 + n11) if n10 + n11 else 0.0
    p = (n01 + n11) / (n00 + n01 + n10 + n11)
    ll_ind = (xlogy(n00, 1 - p01) + xlogy(n01, p01) + xlogy(n10, 1 - p11) + xlogy(n11, p11))
    ll_0 = xlogy(n00 + n10, 1 - p) + xlogy(n01 + n11, p)
    stat = max(float(-2 * (ll_0 - ll_ind)), 0.0)
    return CoverageResult(stat, float(chi2.sf(stat, 1)))


def lrcc(h, q0: float, min_n: int = 50) -> CoverageResult:
    uc = lruc(h, q0, min_n)
    ind = lrind(h, min_n)
    stat = uc.stat + ind.stat
    return CoverageResult(stat, float(chi2.sf(stat, 2)), uc.corrected)


def dq_test(h, q0: float, var_series, lags: int = 4, min_n: int = 50) -> CoverageResult:
    """Dynamic quantile test: centred hits on intercept, lagged centred hits and VaR."""
    h = _hits_array(h, min_n)
    _check_q0(q0)
    v = np.asarray(var_series, dtype=float)
    if v.shape != h.shape:
        raise OgiError("VaR series must align with hits")
    c = h - q0
    y = c[lags:]
    cols = [np.ones(y.size)] + [c[lags - j:-j] for j in range(1, lags + 1)] + [v[lags:]]
    X = np.column_stack(cols)
    beta, *_ = np.linalg.lstsq(X, y, rcond=None)
    Xb = X @ beta
    stat = float(Xb @ Xb / (q0 * (1 - q0)))
    return CoverageResult(stat, float(chi2.sf(stat, X.shape[1])))


def mv_allocation(expected_return: float, var_forecast_: float, xi: float) -> float:
    """Mean-variance weight E[R]/(xi Var[R]) clipped to [0, 1]."""
    if not var_forecast_ > 0:
        raise OgiError("variance forecast must be positive")
    if not xi > 0:
        raise OgiError("risk aversion must be positive")
    return float(np.clip(expected_return / (xi * var_forecast_), 0.0, 1.0))


def sharpe(returns) -> float:
    r = np.asarray(returns, dtype=float)
    sd = float(np.std(r, ddof=1)) if r.size > 1 else 0.0
    if not sd > 0:
        raise OgiError("zero standard deviation: Sharpe ratio undefined")
    return float(r.mean() / sd)


def expected_utility(returns, xi: float) -> float:
    r = np.asarray(returns, dtype=float)
    sd2 = float(np.var(r, ddof=1)) if r.size > 1 else 0.0
    return float(r.mean() - 0.5 * xi * sd2)


@dataclass(frozen=True)
class PersistenceResult:
    coef: tuple[float, float]
    acf: np.ndarray  # lags 1..max_lag
    lag1: float
    max_abs: float


def acf(x, max_lag: int) -> np.ndarray:
    """Sample autocorrelations at lags 0..max_lag (biased normalization)."""
    u = np.asarray(x, dtype=float) - np.mean(x)
    d = float(u @ u)
    if d == 0:
        return np.concatenate(([1.0], np.zeros(max_lag)))
    return np.array([1.0] + [float(u[k:] @ u[:-k]) / d for k in range(1, max_lag + 1)])


def persistence_regression(realized, vol, max_lag: int = ACF_LAGS, min_n: int = 60) -> PersistenceResult:
    r, v = _aligned(realized, vol)
    if r.size < min_n:
        raise OgiError(f"need at least {min_n} observations, got {r.size}")
    if np.ptp(v) == 0:
        raise OgiError("constant volatility series: singular design")
    X = np.column_stack([np.ones_like(v), v])
    coef, *_ = np.linalg.lstsq(X, r, rcond=None)
    resid = r - X @ coef
    # exact fits leave rounding noise; treat it as zero
    if np.max(np.abs(resid)) <= 1e-12 * max(1.0, np.max(np.abs(r))):
        resid = np.zeros_like(resid)
    a = acf(resid, max_lag)[1:]
    return PersistenceResult((float(coef[0]), float(coef[1])), a, float(a[0]), float(np.max(np.abs(a))))
