"""
Jump-robust pre-averaging realized variance.

For one day with ``m`` tick increments and bandwidth ``K``::

    RV = 1/(psi K) * sum_k (Ybar_k^2 - Yhat_k^2 / 2) * 1{|Ybar_k| <= tau_m}

where ``Ybar_k`` is the g-weighted sum of the ``K-1`` increments following
tick ``k``, ``Yhat_k^2`` the noise correction built from squared weight
differences, and ``tau_m = c_tau * m**-0.235``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np
from scipy.integrate import simpson

from .core import MarketDay, OgiError

log = logging.getLogger(__name__)


def triangular(x):
    return np.minimum(x, 1.0 - x)


@dataclass(frozen=True)
class PrvConfig:
    """Settings of the pre-averaging estimator.

    ``ctau_norm_exponent`` is the power of ``m`` applied to the
    pre-averaged values before taking their standard deviation for the
    truncation constant.  ``ctau`` overrides the data-driven constant
    (``np.inf`` disables truncation).
    """

    K: int | None = None
    g: Callable | None = None
    ctau_multiplier: float = 3.0
    exponent: float = 0.235
    ctau_norm_exponent: float = 0.25
    floor: float = 1e-12
    pooled: bool = True
    ctau: float | None = None

    def __post_init__(self):
        if self.ctau_multiplier <= 0:
            raise ValueError("ctau_multiplier must be positive")
        if self.K is not None and self.K < 2:
            raise ValueError("K must be >= 2")

    def bandwidth(self, m: int) -> int:
        return int(np.floor(np.sqrt(m))) if self.K is None else int(self.K)

    @property
    def weight(self) -> Callable:
        return triangular if self.g is None else self.g

    @property
    def psi(self) -> float:
        if self.g is None:
            return 1.0 / 12.0
        x = np.linspace(0.0, 1.0, 1025)
        return float(simpson(np.asarray(self.g(x), dtype=float) ** 2, x=x))


def preaverage(y, K: int, g: Callable = triangular) -> np.ndarray:
    """Ybar_k = sum_{l=1}^{K-1} g(l/K) (Y_{k+l} - Y_{k+l-1}), k = 1..m-K+1."""
    r = np.diff(np.asarray(y, dtype=float))
    m = r.size
    if m < K:
        raise OgiError(f"need at least K={K} increments, got {m}")
    w = np.asarray(g(np.arange(K) / K), dtype=float)
    w[0] = 0.0
    return np.correlate(r, w, mode="valid")


def noise_correction(y, K: int, g: Callable = triangular) -> np.ndarray:
    """Yhat_k^2 = sum_{l=1}^{K} (g(l/K) - g((l-1)/K))^2 (Y_{k+l-1} - Y_{k+l-2})^2."""
    r = np.diff(np.asarray(y, dtype=float))
    gv = np.asarray(g(np.arange(K + 1) / K), dtype=float)
    dg2 = np.diff(gv) ** 2
    return np.correlate(r * r, dg2, mode="valid")


def ctau_from_data(values, multiplier: float, m, norm_exponent: float = 0.25) -> float:
    """multiplier * sample sd of m**norm_exponent * Ybar over the given values.

    ``m`` is a scalar or an array aligned with ``values`` (pooling days
    with different tick counts).
    """
    v = np.asarray(values, dtype=float).ravel()
    if v.size < 2:
        raise OgiError("need at least two pre-averaged values")
    scaled = np.asarray(m, dtype=float) ** norm_exponent * v
    return float(multiplier * np.std(scaled, ddof=1))


@dataclass(frozen=True)
class PrvDay:
    day_index: int
    rv: float
    truncated_windows: int
    m: int


def prv_from_prices(y, cfg: PrvConfig, ctau: float) -> tuple[float, int]:
    y = np.asarray(y, dtype=float)
    m = y.size - 1
    K = cfg.bandwidth(m)
    if m < K:
        raise OgiError(f"day has {m} increments, too few for K={K}")
    g = cfg.weight
    ybar = preaverage(y, K, g)
    yhat = noise_correction(y, K, g)
    tau = ctau * m ** (-cfg.exponent) if np.isfinite(ctau) else np.inf
    keep = np.abs(ybar) <= tau
    val = float(np.sum((ybar * ybar - 0.5 * yhat)[keep]) / (cfg.psi * K))
    if val < cfg.floor:
        val = 0.0 if val == 0.0 else cfg.floor
    return val, int(keep.size - keep.sum())


def prv(day: MarketDay, cfg: PrvConfig | None = None, ctau: float | None = None) -> float:
    """PRV of a single day; without a pooled constant the day's own data set it."""
    cfg = cfg or PrvConfig()
    if ctau is None:
        ctau = cfg.ctau if cfg.ctau is not None else _day_ctau(day.tick_logprices, cfg)
    return prv_from_prices(day.tick_logprices, cfg, ctau)[0]


def _day_ctau(y, cfg: PrvConfig) -> float:
    m = y.size - 1
    yb = preaverage(y, cfg.bandwidth(m), cfg.weight)
    if yb.size < 2:
        return np.inf
    return ctau_from_data(yb, cfg.ctau_multiplier, m, cfg.ctau_norm_exponent)


def prv_series(days: Iterable[MarketDay], cfg: PrvConfig | None = None) -> list[PrvDay]:
    """PRV for every day, with c_tau pooled across days unless configured otherwise."""
    cfg = cfg or PrvConfig()
    days = list(days)
    if cfg.ctau is not None:
        ctaus = [cfg.ctau] * len(days)
    elif cfg.pooled:
        vals, ms = [], []
        for d in days:
            yb = preaverage(d.tick_logprices, cfg.bandwidth(d.m), cfg.weight)
            vals.append(yb)
            ms.append(np.full(yb.size, d.m, dtype=float))
        allv = np.concatenate(vals) if vals else np.empty(0)
        c = ctau_from_data(allv, cfg.ctau_multiplier, np.concatenate(ms), cfg.ctau_norm_exponent) \
            if allv.size >= 2 else np.inf
        ctaus = [c] * len(days)
    else:
        ctaus = [_day_ctau(d.tick_logprices, cfg) for d in days]
    out = []
    for d, c in zip(days, ctaus):
        rv, nt = prv_from_prices(d.tick_logprices, cfg, c)
        out.append(PrvDay(d.day_index, rv, nt, d.m))
    return out


def prv_matrix(prices: np.ndarray, cfg: PrvConfig | None = None) -> np.ndarray:
    """PRV for a (n_days, m+1) block of equally spaced session prices, pooled c_tau."""
    cfg = cfg or PrvConfig()
    prices = np.asarray(prices, dtype=float)
    m = prices.shape[1] - 1
    K = cfg.bandwidth(m)
    g = cfg.weight
    if cfg.ctau is not None:
        c = cfg.ctau
    else:
        yb = np.concatenate([preaverage(p, K, g) for p in prices])
        c = ctau_from_data(yb, cfg.ctau_multiplier, m, cfg.ctau_norm_exponent)
    return np.array([prv_from_prices(p, cfg, c)[0] for p in prices])
