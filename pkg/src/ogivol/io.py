"""
CSV formats and run configuration.

Floats are written with ``repr`` so that parsing restores them bit for bit.
All files are UTF-8 with LF line endings.
"""
from __future__ import annotations

import csv
import hashlib
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .core import (DEFAULT_LAMBDA, DEFAULT_THETA, Bounds, DaySeries, FullTheta, MarketDay,
                   OgiError, ValidationError)

HF_HEADER = ("day_index", "time", "log_price")
DAILY_HEADER = ("day_index", "open_log_price", "close_log_price")
RV_HEADER = ("day_index", "rv", "truncated_windows", "m_d")
TRUE_IV_HEADER = ("day_index", "iv_H", "iv_L", "ov")


class FormatError(OgiError, ValueError):
    pass


def fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return repr(float(x))


def _write_rows(path, header, rows: Iterable):
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(",".join(header) + "\n")
        for row in rows:
            f.write(",".join(fmt(v) for v in row) + "\n")


def _read_rows(path, header, types):
    path = Path(path)
    if not path.exists():
        raise FormatError(f"{path}: no such file")
    out = []
    with open(path, encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        try:
            head = next(reader)
        except StopIteration:
            raise FormatError(f"{path}: empty file") from None
        if tuple(h.strip() for h in head) != header:
            raise FormatError(f"{path}: expected header {','.join(header)}, got {','.join(head)}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise FormatError(f"{path}: row {lineno}: expected {len(header)} fields, got {len(row)}")
            try:
                out.append(tuple(t(v) for t, v in zip(types, row)))
            except ValueError as e:
                raise FormatError(f"{path}: row {lineno}: {e}") from None
    return out


# ---------------------------------------------------------------------------
# high-frequency and daily files

def write_highfreq(path, days: DaySeries):
    def rows():
        for d in days.days:
            for t, y in zip(d.tick_times, d.tick_logprices):
                yield d.day_index, t, y
    _write_rows(path, HF_HEADER, rows())


def write_daily(path, days: DaySeries):
    _write_rows(path, DAILY_HEADER,
                ((d.day_index, d.open_logprice, d.close_logprice) for d in days.days))


def read_highfreq(path) -> dict[int, tuple[np.ndarray, np.ndarray]]:
    """Ticks grouped by day: {day_index: (times, log_prices)}."""
    rows = _read_rows(path, HF_HEADER, (int, float, float))
    out: dict[int, tuple[list, list]] = {}
    prev = None
    for i, (d, t, y) in enumerate(rows, start=2):
        if prev is not None and (d, t) <= prev:
            raise FormatError(f"{path}: row {i}: rows must be sorted by (day_index, time)")
        prev = (d, t)
        ts, ys = out.setdefault(d, ([], []))
        ts.append(t)
        ys.append(y)
    return {d: (np.array(ts), np.array(ys)) for d, (ts, ys) in out.items()}


def read_daily(path) -> list[tuple[int, float, float]]:
    rows = _read_rows(path, DAILY_HEADER, (int, float, float))
    for i, (a, b) in enumerate(zip(rows, rows[1:]), start=3):
        if b[0] != a[0] + 1:
            raise FormatError(f"{path}: row {i}: day_index values must be consecutive")
    return rows


def read_days(hf_path, daily_path=None) -> DaySeries:
    """Assemble a DaySeries; without a daily file the first and last ticks are the open and close."""
    ticks = read_highfreq(hf_path)
    if daily_path is None:
        oc = {d: (float(y[0]), float(y[-1])) for d, (_, y) in ticks.items()}
    else:
        oc = {d: (o, c) for d, o, c in read_daily(daily_path)}
    days = []
    for d in sorted(ticks):
        if d not in oc:
            raise FormatError(f"day {d} has ticks but no open/close record")
        t, y = ticks[d]
        try:
            days.append(MarketDay(d, t, y, *oc[d]))
        except ValidationError as e:
            raise FormatError(str(e)) from None
    try:
        return DaySeries(tuple(days))
    except ValidationError as e:
        raise FormatError(str(e)) from None


# ---------------------------------------------------------------------------
# per-day series

def write_rv(path, records):
    """records: iterable of PrvDay (or tuples in RV_HEADER order)."""
    def rows():
        for r in records:
            if hasattr(r, "rv"):
                yield r.day_index, float(r.rv), int(r.truncated_windows), int(r.m)
            else:
                yield r[0], float(r[1]), int(r[2]), int(r[3])
    _write_rows(path, RV_HEADER, rows())


def read_rv(path) -> list[tuple[int, float, int, int]]:
    return _read_rows(path, RV_HEADER, (int, float, int, int))


def write_true_iv(path, iv_H, iv_L, ov, first_day: int = 1):
    _write_rows(path, TRUE_IV_HEADER,
                ((first_day + i, a, b, c) for i, (a, b, c) in enumerate(zip(iv_H, iv_L, ov))))


def read_true_iv(path):
    return _read_rows(path, TRUE_IV_HEADER, (int, float, float, float))


def write_series_csv(path, header, columns):
    """Generic column CSV (used for plot-ready outputs)."""
    _write_rows(path, header, zip(*columns))


def dump_json(path, obj):
    Path(path).write_text(json.dumps(to_jsonable(obj), indent=2, allow_nan=True) + "\n",
                          encoding="utf-8")


def to_jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def file_sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


# ---------------------------------------------------------------------------
# configuration

DEFAULTS: dict[str, Any] = {
    "session.lambda": DEFAULT_LAMBDA,
    "prv.K": 0,  # 0 means floor(sqrt(m))
    "prv.ctau_multiplier": 3.0,
    "prv.exponent": 0.235,
    "prv.ctau_norm_exponent": 0.25,
    "prv.pooled": True,
    "fit.model": "ogi",
    "fit.convention": "main",
    "fit.min_days": 30,
    "fit.bounds.omega": [1e-8, 10.0],
    "fit.bounds.gamma": [0.01, 0.999],
    "fit.bounds.alpha": [1e-6, 0.999],
    "fit.bounds.beta": [1e-6, 0.999],
    "fit.n_starts": 5,
    "fit.jitter": 0.5,
    "fit.xatol": 1e-8,
    "fit.fatol": 1e-10,
    "fit.maxfev": 10000,
    "fit.seed": 0,
    "backtest.window": 500,
    "backtest.refit_stride": 1,
    "backtest.q0": [0.01, 0.02, 0.05, 0.1, 0.2],
    "backtest.xi": [2.5, 5.0],
    "backtest.baseline": "ogi",
    "backtest.min_in_sample": 100,
    "sim.theta": list(DEFAULT_THETA.as_array()),
    "sim.n_days": 500,
    "sim.m_all": 43200,
    "sim.m_obs": 390,
    "sim.burn_in_days": 50,
    "sim.seed": 0,
    "sim.jump_size": 0.05,
    "sim.jump_intensity": 10.0,
    "sim.noise_rel_scale": 0.01,
}


def _flatten(d: dict, prefix="") -> dict:
    out = {}
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        else:
            out[key] = v
    return out


def _coerce(key, value, default):
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ValidationError(f"config key {key}: expected a boolean")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ValidationError(f"config key {key}: expected an integer")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ValidationError(f"config key {key}: expected a number")
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ValidationError(f"config key {key}: expected a string")
        return value
    if isinstance(default, list):
        if not isinstance(value, list) or not all(isinstance(v, (int, float)) and not isinstance(v, bool)
                                                   for v in value):
            raise ValidationError(f"config key {key}: expected a list of numbers")
        return [float(v) for v in value]
    return value


@dataclass
class RunConfig:
    values: dict = field(default_factory=lambda: dict(DEFAULTS))

    @classmethod
    def from_mapping(cls, data: dict) -> "RunConfig":
        flat = _flatten(data)
        unknown = sorted(set(flat) - set(DEFAULTS))
        if unknown:
            raise ValidationError(f"unknown config keys: {', '.join(unknown)}")
        vals = dict(DEFAULTS)
        for k, v in flat.items():
            vals[k] = _coerce(k, v, DEFAULTS[k])
        if len(vals["sim.theta"]) != 11:
            raise ValidationError("sim.theta must have 11 entries")
        for k in ("fit.bounds.omega", "fit.bounds.gamma", "fit.bounds.alpha", "fit.bounds.beta"):
            lo, hi = vals[k] if len(vals[k]) == 2 else (None, None)
            if lo is None or not lo < hi:
                raise ValidationError(f"{k} must be [lower, upper] with lower < upper")
        return cls(vals)

    @classmethod
    def load(cls, path) -> "RunConfig":
        p = Path(path)
        if not p.exists():
            raise FormatError(f"{p}: no such config file")
        try:
            data = tomllib.loads(p.read_text(encoding="utf-8"))
        except tomllib.TOMLDecodeError as e:
            raise FormatError(f"{p}: {e}") from None
        return cls.from_mapping(data)

    def __getitem__(self, key):
        return self.values[key]

    def with_overrides(self, **kv) -> "RunConfig":
        vals = dict(self.values)
        for k, v in kv.items():
            key = k.replace("__", ".")
            if key not in DEFAULTS:
                raise ValidationError(f"unknown config key {key}")
            vals[key] = _coerce(key, v, DEFAULTS[key])
        return RunConfig(vals)

    def resolved(self) -> dict:
        """Sorted flat mapping, embedded in every output for reproducibility."""
        return {k: self.values[k] for k in sorted(self.values)}

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.resolved(), sort_keys=True).encode()).hexdigest()

    # builders -------------------------------------------------------------

    @property
    def lam(self) -> float:
        return float(self["session.lambda"])

    def sim_config(self):
        from .simulator import JumpConfig, NoiseConfig, SimConfig
        return SimConfig(
            theta=FullTheta.from_array(self["sim.theta"]), lam=self.lam,
            n_days=self["sim.n_days"], m_all=self["sim.m_all"], m_obs=self["sim.m_obs"],
            jump=JumpConfig(self["sim.jump_size"], self["sim.jump_intensity"]),
            noise=NoiseConfig(self["sim.noise_rel_scale"]),
            burn_in_days=self["sim.burn_in_days"], seed=self["sim.seed"])

    def prv_config(self):
        from .prv import PrvConfig
        return PrvConfig(K=self["prv.K"] or None, ctau_multiplier=self["prv.ctau_multiplier"],
                         exponent=self["prv.exponent"],
                         ctau_norm_exponent=self["prv.ctau_norm_exponent"],
                         pooled=self["prv.pooled"])

    def bounds(self) -> Bounds:
        return Bounds(tuple(self["fit.bounds.omega"]), tuple(self["fit.bounds.gamma"]),
                      tuple(self["fit.bounds.alpha"]), tuple(self["fit.bounds.beta"]))

    def optimizer(self):
        from .optim import OptimizerSettings
        return OptimizerSettings(n_starts=self["fit.n_starts"], jitter=self["fit.jitter"],
                                 xatol=self["fit.xatol"], fatol=self["fit.fatol"],
                                 maxfev=self["fit.maxfev"], seed=self["fit.seed"])
