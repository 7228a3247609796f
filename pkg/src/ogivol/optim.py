"""Box-constrained maximization: simplex search on a logistic transform, then a gradient polish."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit, logit

PENALTY = 1e10


@dataclass
class OptimizerSettings:
    n_starts: int = 5
    jitter: float = 0.5
    xatol: float = 1e-8
    fatol: float = 1e-10
    maxfev: int = 10_000
    polish: bool = True
    seed: int = 0


@dataclass
class OptimResult:
    x: np.ndarray
    fun: float  # maximized objective value at x
    converged: bool
    n_evals: int
    n_iter: int
    trace: list[float] = field(default_factory=list)
    start_values: list[float] = field(default_factory=list)
    active: np.ndarray | None = None


def to_unit(x, lo, hi):
    u = (np.asarray(x, dtype=float) - lo) / (hi - lo)
    return logit(np.clip(u, 1e-12, 1 - 1e-12))


def from_unit(z, lo, hi):
    return lo + (hi - lo) * expit(z)


def _tracer(trace: list):
    # scipy passes the current best point when the parameter is named this way
    def cb(intermediate_result):
        trace.append(float(intermediate_result.fun))
    return cb


def maximize(obj: Callable[[np.ndarray], float], x0, lo, hi,
             grad: Callable[[np.ndarray], np.ndarray] | None = None,
             feasible: Callable[[np.ndarray], bool] | None = None,
             settings: OptimizerSettings | None = None,
             extra_starts: list[np.ndarray] | None = None) -> OptimResult:
    """Maximize ``obj`` over the open box (lo, hi).

    Infeasible points get a large negative value, so the simplex never
    accepts them.  Starts are ``x0``, any ``extra_starts``, then jittered
    copies of ``x0`` drawn from the seeded generator.
    """
    s = settings or OptimizerSettings()
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    rng = np.random.default_rng(s.seed)

    def neg(z):
        x = from_unit(z, lo, hi)
        if feasible is not None and not feasible(x):
            return PENALTY
        v = obj(x)
        return -v if np.isfinite(v) else PENALTY

    z0 = to_unit(x0, lo, hi)
    starts = [z0] + [to_unit(e, lo, hi) for e in (extra_starts or [])]
    while len(starts) < max(s.n_starts, 1):
        starts.append(z0 + s.jitter * rng.standard_normal(z0.size))

    best = None
    total_evals = 0
    start_values = []
    for z in starts:
        trace = [neg(z)]
        cb = _tracer(trace)

        res = minimize(neg, z, method="Nelder-Mead", callback=cb,
                       options=dict(xatol=s.xatol, fatol=s.fatol, maxfev=s.maxfev,
                                    maxiter=s.maxfev, adaptive=z.size > 4))
        total_evals += res.nfev
        start_values.append(-float(res.fun))
        if best is None or res.fun < best[0].fun:
            best = (res, [-t for t in trace])

    res, trace = best
    x = from_unit(res.x, lo, hi)
    fun = -float(res.fun)
    converged = bool(res.success)
    n_iter = int(res.nit)

    if s.polish and grad is not None and fun > -PENALTY / 2:
        # keep the polish strictly inside the box
        span = hi - lo
        blo, bhi = lo + 1e-10 * span, hi - 1e-10 * span

        def f(x):
            if feasible is not None and not feasible(x):
                return PENALTY
            return -obj(x)

        def g(x):
            return -grad(x)

        pol = minimize(f, np.clip(x, blo, bhi), jac=g, method="L-BFGS-B",
                       bounds=list(zip(blo, bhi)), options=dict(ftol=1e-15, gtol=1e-10, maxiter=500))
        total_evals += pol.nfev
        if pol.fun < PENALTY / 2 and -pol.fun > fun and (feasible is None or feasible(pol.x)):
            x = np.asarray(pol.x, dtype=float)
            fun = -float(pol.fun)
            trace.append(fun)
            converged = converged or bool(pol.success)

    fun = float(obj(x))
    span = hi - lo
    active = (x - lo < 1e-6 * span) | (hi - x < 1e-6 * span)
    return OptimResult(x, fun, converged, total_evals, n_iter, trace, start_values, active)
