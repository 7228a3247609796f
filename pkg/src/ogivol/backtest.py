"""
Rolling-window forecasting and the evaluation report.

Each out-of-sample day ``t`` uses the ``window`` days before it.  Models are
refitted every ``refit_stride`` days; in between, the last parameters are
re-filtered on the moving window.  Forecast rows are collected in (day,
model) order so the output does not depend on worker scheduling.
"""
from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from . import evaluation as ev
from .core import OgiError
from .estimation import CompetitorFit, fit_competitor, refilter
from .filters import FilterInput
from .optim import OptimizerSettings

log = logging.getLogger(__name__)

FORECAST_BASE_HEADER = ("day_index", "model", "forecast", "realized", "ret", "prev_ret")


def worker_count() -> int:
    env = os.environ.get("OGI_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise OgiError(f"OGI_THREADS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


@dataclass(frozen=True)
class BacktestSettings:
    window: int = 500
    refit_stride: int = 1
    q0: tuple[float, ...] = ev.Q0_LEVELS
    xi: tuple[float, ...] = ev.XI_LEVELS
    baseline: str = "ogi"
    min_in_sample: int = 100


def model_returns(inp: FilterInput, kind: str) -> np.ndarray:
    return inp.oo_ret if kind == "oo" else inp.session_ret


def _run_model(model: str, inp: FilterInput, bs: BacktestSettings, opt: OptimizerSettings):
    """Forecast rows for one model over every out-of-sample day."""
    n = inp.n
    rows = []
    fit: CompetitorFit | None = None
    for j, t in enumerate(range(bs.window, n)):
        win = inp.slice(t - bs.window, t)
        if fit is None or j % bs.refit_stride == 0:
            fit = fit_competitor(model, win, opt)
            cur = fit
        else:
            cur = refilter(fit, win)
        r_all = model_returns(inp, cur.return_kind)
        r_in = r_all[t - bs.window:t]
        vals = [float(cur.forecast), float(inp.rv[t] + inp.ov[t]), float(r_all[t]), float(r_all[t - 1])]
        for q in bs.q0:
            vals.append(ev.var_forecast(r_in, cur.fitted, cur.forecast, q, bs.min_in_sample))
        rows.append((t + 1, model, vals, cur.return_kind, bool(cur.converged)))
    return rows


def run_backtest(inp: FilterInput, models, settings: BacktestSettings | None = None,
                 optimizer: OptimizerSettings | None = None, workers: int | None = None):
    """Rolling one-day-ahead forecasts for each model.

    Returns (rows, meta): rows are (day_index, model, values, return_kind,
    converged) sorted by day then model order.
    """
    bs = settings or BacktestSettings()
    opt = optimizer or OptimizerSettings()
    models = list(models)
    if not models:
        raise OgiError("no models given")
    if inp.n <= bs.window:
        raise OgiError(f"need more than window={bs.window} days, got {inp.n}")
    if bs.window < bs.min_in_sample:
        raise OgiError(f"window {bs.window} is shorter than the VaR floor {bs.min_in_sample}")
    if bs.refit_stride < 1:
        raise OgiError("refit_stride must be >= 1")
    workers = worker_count() if workers is None else workers
    if workers > 1 and len(models) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(models))) as pool:
            parts = list(pool.map(_run_model, models, [inp] * len(models),
                                  [bs] * len(models), [opt] * len(models)))
    else:
        parts = [_run_model(m, inp, bs, opt) for m in models]
    order = {m: i for i, m in enumerate(models)}
    rows = sorted((r for p in parts for r in p), key=lambda r: (r[0], order[r[1]]))
    kinds = {m: p[0][3] for m, p in zip(models, parts)}
    conv = {m: all(r[4] for r in p) for m, p in zip(models, parts)}
    return rows, dict(return_kind=kinds, converged=conv)


def forecast_header(q0s) -> tuple[str, ...]:
    return FORECAST_BASE_HEADER + tuple(f"var_{q!r}" for q in q0s)


# ---------------------------------------------------------------------------
# summary

@dataclass
class ModelSeries:
    day: np.ndarray
    forecast: np.ndarray
    realized: np.ndarray
    ret: np.ndarray
    prev_ret: np.ndarray
    var: dict[float, np.ndarray]


def split_rows(table: list[tuple], q0s) -> dict[str, ModelSeries]:
    """Group forecast-file rows by model, keeping first-appearance order."""
    by: dict[str, list] = {}
    for row in table:
        by.setdefault(row[1], []).append(row)
    out = {}
    for m, rs in by.items():
        a = np.array([[r[0], r[2], r[3], r[4], r[5]] + list(r[6:]) for r in rs], dtype=float)
        out[m] = ModelSeries(a[:, 0].astype(int), a[:, 1], a[:, 2], a[:, 3], a[:, 4],
                             {q: a[:, 5 + i] for i, q in enumerate(q0s)})
    return out


def _dm(a, b):
    try:
        s, p = ev.dm_test(a, b)
        return dict(stat=s, p_value=p)
    except ev.OgiError as e:
        return dict(stat=None, p_value=None, error="identical losses" if "identical" in str(e) else str(e))


def summarize(series: dict[str, ModelSeries], q0s, xis, baseline: str, return_kind=None) -> dict:
    """The full evaluation report with fixed key order."""
    if not series:
        raise OgiError("empty table: no forecasts to summarize")
    models = list(series)
    base = series.get(baseline)
    loss, var, util, acf = {}, {}, {}, {}
    for m in models:
        s = series[m]
        se = ev.squared_errors(s.forecast, s.realized)
        ql = ev.qlike_terms(s.forecast, s.realized)
        entry = dict(mspe=float(se.mean()), qlike=float(ql.mean()), n=int(se.size))
        if base is not None and m != baseline:
            bse = ev.squared_errors(base.forecast, base.realized)
            bql = ev.qlike_terms(base.forecast, base.realized)
            entry["dm_mspe"] = _dm(se, bse)
            entry["dm_qlike"] = _dm(ql, bql)
        loss[m] = entry

        var[m] = {}
        for q in q0s:
            v = s.var[q]
            h = ev.hits(s.ret, v)
            d = dict(hit_rate=float(h.mean()))
            try:
                uc, cc, dq = ev.lruc(h, q), ev.lrcc(h, q), ev.dq_test(h, q, v)
                d.update(lruc_stat=uc.stat, lruc_p=uc.p_value, lrcc_stat=cc.stat, lrcc_p=cc.p_value,
                         dq_stat=dq.stat, dq_p=dq.p_value, corrected=uc.corrected)
            except ev.OgiError as e:
                d.update(error=str(e))
            var[m][repr(q)] = d

        util[m] = {}
        for xi in xis:
            x = np.array([ev.mv_allocation(e, f, xi) for e, f in zip(s.prev_ret, s.forecast)])
            pr = x * s.ret
            d = dict(mean_position=float(x.mean()), eu=ev.expected_utility(pr, xi))
            try:
                d["sr"] = ev.sharpe(pr)
            except ev.OgiError:
                d["sr"] = None
            util[m][repr(float(xi))] = d

        try:
            pr_ = ev.persistence_regression(s.realized, s.forecast)
            acf[m] = dict(coef=list(pr_.coef), lag1=pr_.lag1, max_abs=pr_.max_abs, acf=pr_.acf.tolist())
        except ev.OgiError as e:
            acf[m] = dict(error=str(e))
    return dict(models=models, baseline=baseline,
                return_kind=dict(return_kind or {}),
                loss=loss, var=var, utility=util, residual_acf=acf)


def qq_points(s: ModelSeries) -> tuple[np.ndarray, np.ndarray]:
    """Normal quantiles against sorted standardized out-of-sample returns."""
    z = np.sort(s.ret / np.sqrt(s.forecast))
    n = z.size
    theo = norm.ppf((np.arange(1, n + 1) - 0.5) / n)
    return theo, z
