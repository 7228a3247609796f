"""
Euler simulation of the OGI process on a fine intraday grid.

The spot variance is evaluated by its explicit piecewise formula at every
grid point.  The within-period integral is accumulated at the left
endpoint and the infinite exponentially weighted sums are carried as two
daily accumulators.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .core import (DEFAULT_LAMBDA, DaySeries, FullTheta, MarketDay, OgiError,
                   DEFAULT_THETA, validate_full_theta)

log = logging.getLogger(__name__)


class SimulationError(OgiError):
    pass


@dataclass(frozen=True)
class JumpConfig:
    jump_size: float = 0.05
    intensity_per_session: float = 10.0

    def __post_init__(self):
        if self.jump_size < 0 or self.intensity_per_session < 0:
            raise ValueError("jump size and intensity must be nonnegative")


@dataclass(frozen=True)
class NoiseConfig:
    rel_scale: float = 0.01

    def __post_init__(self):
        if self.rel_scale < 0:
            raise ValueError("noise scale must be nonnegative")


@dataclass(frozen=True)
class SimConfig:
    theta: FullTheta = DEFAULT_THETA
    lam: float = DEFAULT_LAMBDA
    n_days: int = 500
    m_all: int = 43_200
    m_obs: int = 390
    jump: JumpConfig = field(default_factory=JumpConfig)
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    burn_in_days: int = 50
    seed: int = 0
    initial_sigma2: float | None = None
    keep_full_paths: bool = False

    def __post_init__(self):
        if self.n_days < 1 or self.burn_in_days < 0:
            raise ValueError("n_days must be >= 1 and burn_in_days >= 0")
        if not 0 < self.lam < 1:
            raise ValueError("lambda must lie in (0,1)")
        n_s = self.lam * self.m_all
        if abs(n_s - round(n_s)) > 1e-9 * self.m_all or round(n_s) < 1 or round(n_s) >= self.m_all:
            raise ValueError("lambda * m_all must be an integer number of session steps")
        if self.m_obs < 1 or round(n_s) % self.m_obs:
            raise ValueError(f"m_obs={self.m_obs} must divide the {round(n_s)} session grid steps")

    @property
    def n_session(self) -> int:
        return int(round(self.lam * self.m_all))

    @property
    def n_overnight(self) -> int:
        return self.m_all - self.n_session


@dataclass(frozen=True, eq=False)
class SimOutput:
    """Per-day truth of one simulated path (burn-in removed).

    Day ``d`` (1-based) covers the session ``[d-1, d-1+lam]`` and the
    overnight that follows it, so ``ov[d-1]`` is the squared return from
    that session's close to the next open.
    """

    config: SimConfig
    iv_H: np.ndarray
    iv_L: np.ndarray
    ov: np.ndarray
    open_logprice: np.ndarray
    close_logprice: np.ndarray
    final_logprice: float
    sigma2_open: np.ndarray
    sigma2_close: np.ndarray
    session_logprice: np.ndarray  # (n_days, m_obs+1) true prices on the observation grid
    jump_times: np.ndarray
    jump_sizes: np.ndarray
    mds_H: np.ndarray
    mds_L: np.ndarray
    hH: np.ndarray
    hL: np.ndarray
    true_logprice: np.ndarray | None = None
    spot_variance: np.ndarray | None = None
    hH_next: float = float("nan")  # true-parameter filters for the day after the sample
    hL_next: float = float("nan")

    @property
    def n_days(self) -> int:
        return self.iv_H.size

    @property
    def iv_day(self) -> np.ndarray:
        return self.iv_H + self.iv_L


def transition_open(sigma2_open_prev: float, session_iv: float, overnight_ret_sq: float,
                    theta: FullTheta, lam: float = DEFAULT_LAMBDA) -> float:
    """Spot variance at the next open from the previous open and the day's innovations."""
    t = theta
    return (t.omega_L + t.gamma_L * (t.omega_H1 - t.omega_H2)
            + t.gamma_H * t.gamma_L * sigma2_open_prev
            + t.gamma_L * t.alpha_H / lam * session_iv
            + t.beta_L / (1 - lam) * overnight_ret_sq)


def transition_close(sigma2_close_prev: float, session_iv: float, overnight_ret_sq_prev: float,
                     theta: FullTheta, lam: float = DEFAULT_LAMBDA) -> float:
    """Spot variance at the close from the previous close and the innovations between."""
    t = theta
    return (t.omega_H1 - t.omega_H2 + t.gamma_H * t.omega_L
            + t.gamma_H * t.gamma_L * sigma2_close_prev
            + t.alpha_H / lam * session_iv
            + t.gamma_H * t.beta_L / (1 - lam) * overnight_ret_sq_prev)


def constants_fixed_point(theta: FullTheta) -> float:
    """Open-time spot variance when every innovation term is switched off."""
    g = theta.gamma_H * theta.gamma_L
    return (theta.omega_L + theta.gamma_L * (theta.omega_H1 - theta.omega_H2)) / (1 - g)


@njit(cache=True)
def _simulate_day(p, lam, n_s, n_o, x0, s2_open, SH, SL, dB, dW, jumps,
                  rec_every, rec_out, full_x, full_v, keep_full):
    (wH1, wH2, wL, gH, gL, aH, aL, bH, bL, nH, nL) = (
        p[0], p[1], p[2], p[3], p[4], p[5], p[6], p[7], p[8], p[9], p[10])
    dt = lam / n_s
    sdt = np.sqrt(dt)
    lam2 = lam * lam
    om = 1.0 - lam
    bad = -1

    # open-to-close session
    x = x0
    s2 = s2_open
    integ = 0.0
    z = 0.0
    rec_out[0] = x
    if keep_full:
        full_x[0] = x
        full_v[0] = s2
    for k in range(n_s):
        sd = np.sqrt(s2) if s2 > 0.0 else 0.0
        x += sd * sdt * dB[k] + jumps[k]
        integ += s2 * dt
        z += sdt * dW[k]
        u = lam * (k + 1) / n_s
        s2 = (s2_open + u * u / lam2 * (wH1 + gH * s2_open) - u / lam * (wH2 + s2_open)
              + bH * u * (lam - u) / (lam2 * om) * SH
              + aH / lam * integ + nH / lam2 * (lam - u) * z * z)
        if not np.isfinite(s2) and bad < 0:
            bad = k + 1
        if (k + 1) % rec_every == 0:
            rec_out[(k + 1) // rec_every] = x
        if keep_full:
            full_x[k + 1] = x
            full_v[k + 1] = s2
    iv_H = integ
    x_close = x
    s2_close = s2
    SL = gH * gL * SL + iv_H

    # close-to-open overnight, no jumps
    integ = 0.0
    z = 0.0
    for k in range(n_o):
        sd = np.sqrt(s2) if s2 > 0.0 else 0.0
        x += sd * sdt * dB[n_s + k]
        integ += s2 * dt
        z += sdt * dW[n_s + k]
        v = om * (k + 1) / n_o
        r = x - x_close
        s2 = (s2_close + v / om * (wL + (gL - 1.0) * s2_close)
              + aL * v * (om - v) / (om * om * lam) * SL
              + bL / om * r * r + nL / (om * om) * (om - v) * z * z)
        if not np.isfinite(s2) and bad < 0:
            bad = n_s + k + 1
        if keep_full:
            full_x[n_s + k + 1] = x
            full_v[n_s + k + 1] = s2
    iv_L = integ
    ov = (x - x_close) ** 2
    SH = gH * gL * SH + ov
    return x_close, s2_close, iv_H, iv_L, ov, x, s2, SH, SL, bad


def _path_rng(seed: int) -> tuple[np.random.Generator, np.random.Generator]:
    ss = np.random.SeedSequence(seed)
    a, b = ss.spawn(2)
    return np.random.Generator(np.random.PCG64(a)), np.random.Generator(np.random.PCG64(b))


def simulate(config: SimConfig) -> SimOutput:
    """Simulate ``burn_in_days + n_days`` days and return the last ``n_days``."""
    validate_full_theta(config.theta).raise_if_invalid("FullTheta")
    from .filters import ogi_legs  # local import keeps the module graph acyclic

    theta = config.theta
    lam = config.lam
    n_s, n_o, m_all = config.n_session, config.n_overnight, config.m_all
    n_tot = config.burn_in_days + config.n_days
    rec_every = n_s // config.m_obs
    p = theta.as_array()
    rng, _ = _path_rng(config.seed)

    s2 = constants_fixed_point(theta) if config.initial_sigma2 is None else float(config.initial_sigma2)
    x = 0.0
    SH = SL = 0.0

    iv_H = np.empty(n_tot)
    iv_L = np.empty(n_tot)
    ov = np.empty(n_tot)
    x_open = np.empty(n_tot)
    x_close = np.empty(n_tot)
    s2_open = np.empty(n_tot)
    s2_close = np.empty(n_tot)
    rec = np.empty((config.n_days, config.m_obs + 1))
    scratch = np.empty(config.m_obs + 1)
    keep = config.keep_full_paths
    full_x = np.empty(config.n_days * m_all + 1) if keep else np.empty(1)
    full_v = np.empty(config.n_days * m_all + 1) if keep else np.empty(1)
    jt, js = [], []
    jumps = np.zeros(n_s)

    for d in range(n_tot):
        dB = rng.standard_normal(m_all)
        dW = rng.standard_normal(m_all)
        n_j = rng.poisson(config.jump.intensity_per_session) if config.jump.jump_size > 0 else 0
        jumps[:] = 0.0
        if n_j:
            u = rng.uniform(0.0, lam, n_j)
            sign = 2.0 * rng.integers(0, 2, n_j) - 1.0
            k = np.minimum((u / lam * n_s).astype(np.int64), n_s - 1)
            np.add.at(jumps, k, sign * config.jump.jump_size)
            if d >= config.burn_in_days:
                jt.append(d - config.burn_in_days + u)
                js.append(sign * config.jump.jump_size)
        out_day = d - config.burn_in_days
        rec_out = rec[out_day] if out_day >= 0 else scratch
        if keep and out_day >= 0:
            fx = full_x[out_day * m_all: (out_day + 1) * m_all + 1]
            fv = full_v[out_day * m_all: (out_day + 1) * m_all + 1]
        else:
            fx = fv = full_x[:1]
        x_open[d] = x
        s2_open[d] = s2
        (xc, s2c, ivh, ivl, o, x, s2, SH, SL, bad) = _simulate_day(
            p, lam, n_s, n_o, x, s2, SH, SL, dB, dW, jumps, rec_every, rec_out,
            fx, fv, keep and out_day >= 0)
        if bad >= 0:
            t_bad = d - config.burn_in_days + bad / m_all
            raise SimulationError(f"non-finite spot variance at grid point {bad} of day {d + 1} "
                                  f"(time {t_bad:.8f} after burn-in)")
        x_close[d], s2_close[d], iv_H[d], iv_L[d], ov[d] = xc, s2c, ivh, ivl, o

    # martingale differences against the true-parameter filters, started at
    # the beginning of burn-in so the initial value has washed out
    from .theory import fixed_point, map_theta_to_garch
    tg = map_theta_to_garch(theta, lam)
    hH0, hL0, _ = fixed_point(tg, lam)
    hH_full, hL_full = ogi_legs(tg, iv_H, ov, lam, hH0, hL0)
    hH, hL = hH_full[:-1], hL_full[:-1]
    b = config.burn_in_days
    sl = slice(b, None)
    return SimOutput(
        config=config,
        iv_H=iv_H[sl].copy(), iv_L=iv_L[sl].copy(), ov=ov[sl].copy(),
        open_logprice=x_open[sl].copy(), close_logprice=x_close[sl].copy(), final_logprice=float(x),
        sigma2_open=s2_open[sl].copy(), sigma2_close=s2_close[sl].copy(),
        session_logprice=rec,
        jump_times=np.concatenate(jt) if jt else np.empty(0),
        jump_sizes=np.concatenate(js) if js else np.empty(0),
        mds_H=iv_H[sl] - lam * hH[sl], mds_L=ov[sl] - (1 - lam) * hL[sl],
        hH=hH[sl].copy(), hL=hL[sl].copy(),
        true_logprice=full_x if keep else None,
        spot_variance=full_v if keep else None,
        hH_next=float(hH_full[-1]), hL_next=float(hL_full[-1]),
    )


def make_observations(sim: SimOutput, noise: NoiseConfig | None = None,
                      m_obs: int | None = None, seed: int | None = None) -> DaySeries:
    """Noisy equally spaced ticks for every simulated day.

    Interior ticks get Gaussian noise with standard deviation
    ``rel_scale * sqrt(whole-day IV)``; the open and close are exact.
    """
    cfg = sim.config
    noise = cfg.noise if noise is None else noise
    m_rec = sim.session_logprice.shape[1] - 1
    m_obs = m_rec if m_obs is None else int(m_obs)
    if m_obs < 1 or m_obs > m_rec or m_rec % m_obs:
        raise ValueError(f"m_obs={m_obs} must divide the recorded grid of {m_rec} steps")
    step = m_rec // m_obs
    _, rng = _path_rng(cfg.seed if seed is None else seed)
    lam = cfg.lam
    frac = lam * np.arange(m_obs + 1) / m_obs
    days = []
    for d in range(sim.n_days):
        y = sim.session_logprice[d, ::step].copy()
        eps = rng.standard_normal(m_obs - 1)
        if noise.rel_scale > 0:
            y[1:-1] += noise.rel_scale * np.sqrt(sim.iv_day[d]) * eps
        days.append(MarketDay(d + 1, d + frac, y, float(sim.open_logprice[d]),
                              float(sim.close_logprice[d])))
    return DaySeries(tuple(days))
