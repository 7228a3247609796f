"""
Monte-Carlo experiment helpers: replicated paths, estimation error by
sample size, Z-statistics and one-day-ahead forecast errors.

One replication simulates the longest sample once; shorter samples are its
prefixes, so results across sample sizes are paired.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import DEFAULT_THETA, FullTheta, GarchTheta
from .estimation import (AGGREGATE_NAMES, aggregate_jacobian, aggregate_vector, fit_competitor,
                         fit_ogi)
from .filters import FilterInput
from .optim import OptimizerSettings
from .prv import PrvConfig, prv_matrix
from .simulator import SimConfig, make_observations, simulate
from .theory import DEFAULT_CONVENTION, map_theta_to_garch


@dataclass
class Replication:
    seed: int
    lam: float
    iv_H: np.ndarray
    ov: np.ndarray
    open_lp: np.ndarray
    close_lp: np.ndarray
    final_lp: float
    hH: np.ndarray  # true-parameter filters, day-aligned
    hL: np.ndarray
    hH_next: float
    hL_next: float
    rv: dict = field(default_factory=dict)  # m_obs -> PRV series

    @property
    def n(self) -> int:
        return self.iv_H.size

    def true_h_next(self, n: int) -> float:
        """Whole-day true conditional variance of day n+1 given n observed days."""
        lam = self.lam
        if n == self.n:
            return lam * self.hH_next + (1 - lam) * self.hL_next
        return lam * self.hH[n] + (1 - lam) * self.hL[n]

    def inputs(self, n: int, proxy="true") -> FilterInput:
        """First n days, with true IV (``"true"``) or PRV at ``proxy`` ticks as the RV series."""
        rv = self.iv_H if proxy == "true" else self.rv[proxy]
        nxt = self.final_lp if n == self.n else self.open_lp[n]
        return FilterInput.from_prices(rv[:n], self.open_lp[:n], self.close_lp[:n], nxt, self.lam)


def replicate(seed: int, n_days: int = 500, theta: FullTheta = DEFAULT_THETA,
              m_obs_list=(), prv_cfg: PrvConfig | None = None, **sim_kw) -> Replication:
    """Simulate one path; compute PRV for each requested tick count."""
    m_rec = max(m_obs_list) if m_obs_list else sim_kw.pop("m_obs", 390)
    cfg = SimConfig(theta=theta, n_days=n_days, m_obs=m_rec, seed=seed, **sim_kw)
    sim = simulate(cfg)
    rep = Replication(seed, cfg.lam, sim.iv_H, sim.ov, sim.open_logprice, sim.close_logprice,
                      sim.final_logprice, sim.hH, sim.hL, sim.hH_next, sim.hL_next)
    prv_cfg = prv_cfg or PrvConfig()
    for m in m_obs_list:
        days = make_observations(sim, m_obs=m)
        prices = np.array([d.tick_logprices for d in days.days])
        rep.rv[m] = prv_matrix(prices, prv_cfg)
    return rep


@dataclass
class EstimationRecord:
    n: int
    theta_hat: np.ndarray
    se: np.ndarray
    agg_hat: np.ndarray
    agg_se: np.ndarray
    converged: bool


def estimate(rep: Replication, n: int, proxy="true", settings: OptimizerSettings | None = None,
             convention: str = DEFAULT_CONVENTION) -> EstimationRecord:
    r = fit_ogi(rep.inputs(n, proxy), settings=settings, convention=convention)
    return EstimationRecord(n, r.theta_g_hat.as_array(), np.array(list(r.std_errors.values())),
                            np.array(list(r.aggregates.values())),
                            np.array(list(r.aggregate_std_errors.values())), r.converged)


def z_statistics(records, theta0: GarchTheta, lam: float,
                 convention: str = DEFAULT_CONVENTION) -> np.ndarray:
    """(n_rep, 4) Z-statistics of the aggregates against their true values."""
    f0 = aggregate_vector(theta0.as_array(), lam, convention)
    return np.array([(r.agg_hat - f0) / r.agg_se for r in records])


def forecast_errors(rep: Replication, n: int, models, proxy, settings=None) -> dict[str, float]:
    """|forecast - true h_{n+1}| per model."""
    inp = rep.inputs(n, proxy)
    target = rep.true_h_next(n)
    return {m: abs(fit_competitor(m, inp, settings).forecast - target) for m in models}


def true_theta_g(theta: FullTheta = DEFAULT_THETA, lam: float | None = None) -> GarchTheta:
    from .core import DEFAULT_LAMBDA
    return map_theta_to_garch(theta, DEFAULT_LAMBDA if lam is None else lam)


__all__ = ["Replication", "replicate", "EstimationRecord", "estimate", "z_statistics",
           "forecast_errors", "true_theta_g", "AGGREGATE_NAMES", "aggregate_jacobian"]
