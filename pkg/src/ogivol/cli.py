"""Command-line entry point: simulate, prv, fit, backtest, report.

Exit codes: 0 success, 1 usage or I/O error, 2 numerical non-convergence.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import io as oio
from .backtest import (BacktestSettings, forecast_header, qq_points, run_backtest,
                       split_rows, summarize)
from .core import ConvergenceError, OgiError
from .estimation import MODEL_NAMES, fit_competitor, fit_ogi
from .filters import FilterInput
from .prv import prv_series

log = logging.getLogger("ogivol")

EXIT_OK, EXIT_USAGE, EXIT_NONCONV = 0, 1, 2


class UsageError(OgiError):
    pass


def _config(args) -> oio.RunConfig:
    cfg = oio.RunConfig.load(args.config) if getattr(args, "config", None) else oio.RunConfig()
    if getattr(args, "seed", None) is not None:
        cfg = cfg.with_overrides(sim__seed=args.seed, fit__seed=args.seed)
    return cfg


def _outdir(path) -> Path:
    p = Path(path)
    try:
        p.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise UsageError(f"cannot create output directory {p}: {e}") from None
    return p


# ---------------------------------------------------------------------------

def cmd_simulate(args) -> int:
    from .simulator import make_observations, simulate
    cfg = _config(args)
    out = _outdir(args.out)
    sc = cfg.sim_config()
    sim = simulate(sc)
    days = make_observations(sim)
    files = {"highfreq.csv": lambda p: oio.write_highfreq(p, days),
             "daily.csv": lambda p: oio.write_daily(p, days),
             "true_iv.csv": lambda p: oio.write_true_iv(p, sim.iv_H, sim.iv_L, sim.ov)}
    hashes = {}
    for name, writer in files.items():
        writer(out / name)
        hashes[name] = oio.file_sha256(out / name)
    oio.dump_json(out / "manifest.json", dict(seed=sc.seed, config_sha256=cfg.digest(),
                                               files=hashes, config=cfg.resolved()))
    return EXIT_OK


def cmd_prv(args) -> int:
    cfg = _config(args)
    days = oio.read_days(args.hf, args.daily)
    recs = prv_series(days.days, cfg.prv_config())
    oio.write_rv(args.out, recs)
    return EXIT_OK


def load_input(rv_path, daily_path, lam: float, need_rv: bool = True) -> FilterInput:
    daily = oio.read_daily(daily_path)
    idx = [d for d, _, _ in daily]
    o = np.array([x for _, x, _ in daily])
    c = np.array([x for _, _, x in daily])
    if rv_path is None:
        if need_rv:
            raise UsageError("--rv is required for this model")
        rv = np.zeros(len(daily))
    else:
        rows = oio.read_rv(rv_path)
        rmap = {d: r for d, r, _, _ in rows}
        missing = [d for d in idx if d not in rmap]
        if missing:
            raise UsageError(f"rv file lacks day_index {missing[0]}")
        rv = np.array([rmap[d] for d in idx])
    return FilterInput.from_prices(rv, o, c, lam=lam)


def cmd_fit(args) -> int:
    cfg = _config(args)
    model = args.model or cfg["fit.model"]
    if model not in MODEL_NAMES:
        raise UsageError(f"unknown model {model!r}; choose from {', '.join(MODEL_NAMES)}")
    rv_path = args.rv
    if model in ("garch", "gjr") and rv_path is not None:
        log.warning("model %s uses open-to-open returns only; the rv file is ignored", model)
        rv_path = None
    inp = load_input(rv_path, args.daily, cfg.lam, need_rv=model not in ("garch", "gjr"))
    opt = cfg.optimizer()
    if inp.n < cfg["fit.min_days"]:
        raise UsageError(f"need at least {cfg['fit.min_days']} days, got {inp.n}")
    if model == "ogi":
        rep = fit_ogi(inp, cfg.bounds(), opt, cfg["fit.convention"], cfg["fit.min_days"])
        doc = rep.to_dict()
        converged = rep.converged
    else:
        kw = {}
        if model in ("s-ogi",):
            kw["bounds"] = cfg.bounds()
        f = fit_competitor(model, inp, opt, **kw)
        converged = f.converged
        doc = dict(model=f.kind, params=f.params, objective=f.objective, converged=f.converged,
                   forecast=f.forecast, return_kind=f.return_kind, extra=f.extra, n_days=inp.n)
    doc = dict(model=model, report=doc, config=cfg.resolved())
    oio.dump_json(args.out, doc)
    if not converged:
        log.error("optimizer did not converge; report written to %s", args.out)
        return EXIT_NONCONV
    return EXIT_OK


def cmd_backtest(args) -> int:
    cfg = _config(args)
    models = [m.strip() for m in args.models.split(",") if m.strip()]
    bad = [m for m in models if m not in MODEL_NAMES]
    if bad:
        raise UsageError(f"unknown model {bad[0]!r}; choose from {', '.join(MODEL_NAMES)}")
    window = args.window if args.window is not None else cfg["backtest.window"]
    bs = BacktestSettings(window=window, refit_stride=args.refit_stride or cfg["backtest.refit_stride"],
                          q0=tuple(cfg["backtest.q0"]), xi=tuple(cfg["backtest.xi"]),
                          baseline=args.baseline or cfg["backtest.baseline"],
                          min_in_sample=cfg["backtest.min_in_sample"])
    inp = load_input(args.rv, args.daily, cfg.lam)
    out = _outdir(args.out)
    rows, meta = run_backtest(inp, models, bs, cfg.optimizer())
    table = [(d, m, *vals) for d, m, vals, _, _ in rows]
    oio.write_series_csv(out / "forecasts.csv", forecast_header(bs.q0), list(zip(*table)))
    meta_doc = dict(models=models, window=bs.window, refit_stride=bs.refit_stride, q0=list(bs.q0),
                    xi=list(bs.xi), baseline=bs.baseline, return_kind=meta["return_kind"],
                    converged=meta["converged"], config=cfg.resolved())
    oio.dump_json(out / "meta.json", meta_doc)
    _write_report(out, meta_doc, table, "json")
    return EXIT_OK if all(meta["converged"].values()) else EXIT_NONCONV


def _write_report(out: Path, meta: dict, table, fmt: str):
    q0s, xis = meta["q0"], meta["xi"]
    series = split_rows(table, q0s)
    summ = summarize(series, q0s, xis, meta["baseline"], meta.get("return_kind"))
    # plot-ready data
    acf_rows = [(m, k + 1, v) for m in summ["models"] if "acf" in summ["residual_acf"][m]
                for k, v in enumerate(summ["residual_acf"][m]["acf"])]
    oio.write_series_csv(out / "acf.csv", ("model", "lag", "acf"), list(zip(*acf_rows)) or [[], [], []])
    qq_rows = []
    for m, s in series.items():
        th, z = qq_points(s)
        qq_rows += [(m, a, b) for a, b in zip(th, z)]
    oio.write_series_csv(out / "qq.csv", ("model", "normal_quantile", "standardized_return"),
                         list(zip(*qq_rows)) or [[], [], []])
    if fmt == "json":
        oio.dump_json(out / "report.json", summ)
    else:
        _write_tables_csv(out, summ, q0s, xis)
    return summ


def _num(v):
    return "" if v is None else v


def _write_tables_csv(out: Path, summ: dict, q0s, xis):
    rows = []
    for m in summ["models"]:
        e = summ["loss"][m]
        dmm, dmq = e.get("dm_mspe", {}), e.get("dm_qlike", {})
        rows.append((m, e["mspe"], e["qlike"], _num(dmm.get("stat")), _num(dmm.get("p_value")),
                     _num(dmq.get("stat")), _num(dmq.get("p_value"))))
    oio.write_series_csv(out / "table_loss.csv",
                         ("model", "mspe", "qlike", "dm_mspe_stat", "dm_mspe_p", "dm_qlike_stat", "dm_qlike_p"),
                         list(zip(*rows)))
    rows = []
    for m in summ["models"]:
        for q in q0s:
            d = summ["var"][m][repr(q)]
            rows.append((m, q, d["hit_rate"], _num(d.get("lruc_p")), _num(d.get("lrcc_p")), _num(d.get("dq_p"))))
    oio.write_series_csv(out / "table_var.csv", ("model", "q0", "hit_rate", "lruc_p", "lrcc_p", "dq_p"),
                         list(zip(*rows)))
    rows = []
    for m in summ["models"]:
        for xi in xis:
            d = summ["utility"][m][repr(float(xi))]
            rows.append((m, xi, _num(d["sr"]), d["eu"]))
    oio.write_series_csv(out / "table_utility.csv", ("model", "xi", "sr", "eu"), list(zip(*rows)))


def cmd_report(args) -> int:
    d = Path(args.in_dir)
    meta_p, fc_p = d / "meta.json", d / "forecasts.csv"
    if not meta_p.exists() or not fc_p.exists():
        raise UsageError(f"{d}: missing meta.json or forecasts.csv (empty table)")
    meta = json.loads(meta_p.read_text(encoding="utf-8"))
    header = forecast_header(meta["q0"])
    types = (int, str, *([float] * (len(header) - 2)))
    table = oio._read_rows(fc_p, header, types)
    if not table:
        raise UsageError(f"{fc_p}: empty table")
    _write_report(d, meta, table, args.format)
    return EXIT_OK


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ogivol", description="Overnight GARCH-Ito volatility toolkit")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="cmd", required=True)

    s = sub.add_parser("simulate", help="simulate paths and write CSVs")
    s.add_argument("--config")
    s.add_argument("--out", required=True)
    s.add_argument("--seed", type=int)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("prv", help="pre-averaging realized variance per day")
    s.add_argument("--hf", required=True)
    s.add_argument("--daily")
    s.add_argument("--config")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_prv)

    s = sub.add_parser("fit", help="fit a model and write a JSON report")
    s.add_argument("--rv")
    s.add_argument("--daily", required=True)
    s.add_argument("--model", choices=MODEL_NAMES)
    s.add_argument("--config")
    s.add_argument("--seed", type=int)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_fit)

    s = sub.add_parser("backtest", help="rolling-window forecast evaluation")
    s.add_argument("--rv", required=True)
    s.add_argument("--daily", required=True)
    s.add_argument("--models", required=True, help="comma-separated model names")
    s.add_argument("--window", type=int)
    s.add_argument("--refit-stride", type=int, dest="refit_stride")
    s.add_argument("--baseline")
    s.add_argument("--config")
    s.add_argument("--seed", type=int)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_backtest)

    s = sub.add_parser("report", help="summarize a backtest directory")
    s.add_argument("--in", dest="in_dir", required=True)
    s.add_argument("--format", choices=("csv", "json"), default="json")
    s.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConvergenceError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_NONCONV
    except (OgiError, OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
