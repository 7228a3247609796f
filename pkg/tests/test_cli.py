import csv
import json

import numpy as np
import pytest

from ogivol import io as oio
from ogivol.cli import load_input, main
from ogivol.estimation import fit_ogi
from ogivol.prv import prv_series

SMALL = """
[sim]
n_days = 130
m_all = 4320
m_obs = 390
burn_in_days = 5
seed = 11

[backtest]
window = 100
refit_stride = 10
"""


@pytest.fixture(scope="module")
def simdir(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    (d / "cfg.toml").write_text(SMALL, encoding="utf-8")
    assert main(["simulate", "--config", str(d / "cfg.toml"), "--out", str(d / "sim")]) == 0
    assert main(["prv", "--hf", str(d / "sim/highfreq.csv"), "--daily", str(d / "sim/daily.csv"),
                 "--config", str(d / "cfg.toml"), "--out", str(d / "rv.csv")]) == 0
    return d


def _tree(path):
    return {p.relative_to(path).as_posix(): p.read_bytes() for p in sorted(path.rglob("*")) if p.is_file()}


def test_usage_errors_exit_1(tmp_path, capsys):
    assert main([]) == 1
    assert main(["fit", "--daily", "x.csv"]) == 1
    assert main(["prv", "--hf", str(tmp_path / "nope.csv"), "--out", str(tmp_path / "o.csv")]) == 1
    assert "no such file" in capsys.readouterr().err
    bad = tmp_path / "bad.toml"
    bad.write_text("[sim]\nfoo = 1\n", encoding="utf-8")
    assert main(["simulate", "--config", str(bad), "--out", str(tmp_path / "s")]) == 1


def test_simulate_outputs_and_determinism(simdir, tmp_path):
    files = _tree(simdir / "sim")
    assert set(files) == {"highfreq.csv", "daily.csv", "true_iv.csv", "manifest.json"}
    man = json.loads(files["manifest.json"])
    assert man["seed"] == 11 and man["config"]["sim.n_days"] == 130
    assert man["files"]["daily.csv"] == oio.file_sha256(simdir / "sim/daily.csv")
    assert main(["simulate", "--config", str(simdir / "cfg.toml"), "--out", str(tmp_path / "again")]) == 0
    assert _tree(tmp_path / "again") == files
    assert main(["simulate", "--config", str(simdir / "cfg.toml"), "--seed", "12",
                 "--out", str(tmp_path / "other")]) == 0
    assert _tree(tmp_path / "other")["daily.csv"] != files["daily.csv"]


def test_prv_matches_library_and_is_idempotent(simdir, tmp_path):
    days = oio.read_days(simdir / "sim/highfreq.csv", simdir / "sim/daily.csv")
    cfg = oio.RunConfig.load(simdir / "cfg.toml")
    oio.write_rv(tmp_path / "lib.csv", prv_series(days.days, cfg.prv_config()))
    assert (tmp_path / "lib.csv").read_bytes() == (simdir / "rv.csv").read_bytes()
    assert main(["prv", "--hf", str(simdir / "sim/highfreq.csv"), "--daily", str(simdir / "sim/daily.csv"),
                 "--config", str(simdir / "cfg.toml"), "--out", str(tmp_path / "again.csv")]) == 0
    assert (tmp_path / "again.csv").read_bytes() == (simdir / "rv.csv").read_bytes()


def test_prv_constant_prices_zero(tmp_path):
    rows = ["day_index,time,log_price"]
    for d in (1, 2):
        rows += [f"{d},{d - 1 + k / 1000!r},4.0" for k in range(400)]
    (tmp_path / "hf.csv").write_text("\n".join(rows) + "\n", encoding="utf-8")
    assert main(["prv", "--hf", str(tmp_path / "hf.csv"), "--out", str(tmp_path / "rv.csv")]) == 0
    assert [r[1] for r in oio.read_rv(tmp_path / "rv.csv")] == [0.0, 0.0]


def test_fit_matches_library(simdir, tmp_path):
    out = tmp_path / "fit.json"
    code = main(["fit", "--rv", str(simdir / "rv.csv"), "--daily", str(simdir / "sim/daily.csv"),
                 "--model", "ogi", "--config", str(simdir / "cfg.toml"), "--out", str(out)])
    doc = json.loads(out.read_text(encoding="utf-8"))
    assert code == (0 if doc["report"]["optimizer"]["converged"] else 2)
    cfg = oio.RunConfig.load(simdir / "cfg.toml")
    inp = load_input(simdir / "rv.csv", simdir / "sim/daily.csv", cfg.lam)
    rep = fit_ogi(inp, cfg.bounds(), cfg.optimizer(), cfg["fit.convention"], cfg["fit.min_days"])
    assert doc["report"] == json.loads(json.dumps(oio.to_jsonable(rep.to_dict())))
    assert doc["config"] == cfg.resolved()


def test_fit_garch_ignores_rv(simdir, tmp_path, caplog):
    out = tmp_path / "g.json"
    with caplog.at_level("WARNING"):
        code = main(["fit", "--rv", str(simdir / "rv.csv"), "--daily", str(simdir / "sim/daily.csv"),
                     "--model", "garch", "--out", str(out)])
    assert code in (0, 2)
    assert "ignored" in caplog.text
    assert json.loads(out.read_text())["report"]["model"] == "garch"


def test_fit_tiny_sample_refused(simdir, tmp_path, capsys):
    daily = tmp_path / "d.csv"
    lines = (simdir / "sim/daily.csv").read_text().splitlines()[:11]
    daily.write_text("\n".join(lines) + "\n", encoding="utf-8")
    code = main(["fit", "--rv", str(simdir / "rv.csv"), "--daily", str(daily), "--out", str(tmp_path / "f.json")])
    assert code == 1
    assert "at least" in capsys.readouterr().err


def _backtest(simdir, out, models, extra=()):
    return main(["backtest", "--rv", str(simdir / "rv.csv"), "--daily", str(simdir / "sim/daily.csv"),
                 "--models", models, "--config", str(simdir / "cfg.toml"), "--out", str(out), *extra])


@pytest.fixture(scope="module")
def btdir(simdir):
    out = simdir / "bt"
    assert _backtest(simdir, out, "ogi,garch,rgarch") in (0, 2)
    return out


def test_backtest_report_schema(btdir):
    rep = json.loads((btdir / "report.json").read_text())
    assert rep["models"] == ["ogi", "garch", "rgarch"]
    assert list(rep) == ["models", "baseline", "return_kind", "loss", "var", "utility", "residual_acf"]
    for m in rep["models"]:
        assert {"mspe", "qlike"} <= set(rep["loss"][m])
        assert rep["loss"][m]["n"] == 29
    assert "dm_mspe" in rep["loss"]["garch"] and "dm_mspe" not in rep["loss"]["ogi"]
    assert (btdir / "qq.csv").exists() and (btdir / "acf.csv").exists()


def test_report_mspe_independent_recompute(btdir):
    rep = json.loads((btdir / "report.json").read_text())
    sq = {}
    with open(btdir / "forecasts.csv", newline="") as f:
        for row in csv.DictReader(f):
            sq.setdefault(row["model"], []).append((float(row["forecast"]) - float(row["realized"])) ** 2)
    for m, v in sq.items():
        assert rep["loss"][m]["mspe"] == pytest.approx(sum(v) / len(v), rel=1e-14)


def test_report_rerun_idempotent_and_csv(btdir):
    before = (btdir / "report.json").read_bytes()
    assert main(["report", "--in", str(btdir), "--format", "json"]) == 0
    assert (btdir / "report.json").read_bytes() == before
    assert main(["report", "--in", str(btdir), "--format", "csv"]) == 0
    first = (btdir / "table_loss.csv").read_bytes()
    assert main(["report", "--in", str(btdir), "--format", "csv"]) == 0
    assert (btdir / "table_loss.csv").read_bytes() == first
    assert first.startswith(b"model,mspe,qlike")
    var_rows = (btdir / "table_var.csv").read_text().splitlines()
    assert len(var_rows) == 1 + 3 * 5


def test_report_empty_dir(tmp_path, capsys):
    assert main(["report", "--in", str(tmp_path)]) == 1
    assert "empty table" in capsys.readouterr().err


def test_backtest_single_forecast_and_identical_models(simdir, tmp_path):
    n = len(oio.read_daily(simdir / "sim/daily.csv")) - 1
    out = tmp_path / "one"
    assert _backtest(simdir, out, "garch,garch", ["--window", str(n - 1), "--baseline", "garch"]) in (0, 2)
    with open(out / "forecasts.csv", newline="") as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == 2 and rows[0]["forecast"] == rows[1]["forecast"]


def test_identical_models_dm_surfaced(simdir, tmp_path):
    out = tmp_path / "same"
    assert _backtest(simdir, out, "rgarch,har", ["--baseline", "rgarch"]) in (0, 2)
    # make the second model a copy of the first and rerun the report
    text = (out / "forecasts.csv").read_text().splitlines()
    body = [ln for ln in text[1:] if ",rgarch," in ln]
    copy = [ln.replace(",rgarch,", ",har,") for ln in body]
    (out / "forecasts.csv").write_text("\n".join([text[0]] + body + copy) + "\n", encoding="utf-8")
    assert main(["report", "--in", str(out)]) == 0
    rep = json.loads((out / "report.json").read_text())
    assert rep["loss"]["har"]["dm_mspe"]["error"] == "identical losses"
    assert rep["loss"]["har"]["dm_mspe"]["stat"] is None


def test_backtest_window_too_large(simdir, tmp_path):
    n = len(oio.read_daily(simdir / "sim/daily.csv")) - 1
    assert _backtest(simdir, tmp_path / "x", "garch", ["--window", str(n)]) == 1
    assert _backtest(simdir, tmp_path / "y", "nope") == 1
