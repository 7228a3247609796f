import json
import math

import numpy as np
import pytest
from scipy.optimize import minimize_scalar

from ogivol.core import Bounds, GarchTheta, OgiError
from ogivol.estimation import (MODEL_NAMES, aggregate_jacobian, aggregate_vector, fit_competitor,
                               fit_ogi, leg_qmle_objective, leg_qmle_score, merge_start, refilter,
                               residual_variances, sandwich_cov, step1_qmle, wlse, wlse_gradient,
                               wlse_objective, z_statistic)
from ogivol.experiments import replicate, true_theta_g
from ogivol.filters import FilterInput, ogi_legs
from ogivol.optim import OptimizerSettings, maximize

LAM = 6.5 / 24
TG0 = true_theta_g()


@pytest.fixture(scope="module")
def rep():
    return replicate(101, n_days=500, m_all=4320)


@pytest.fixture(scope="module")
def inp(rep):
    return rep.inputs(500)


@pytest.fixture(scope="module")
def report(inp):
    return fit_ogi(inp)


def random_interior(rng):
    """Stationary interior points of the reduced-parameter box."""
    while True:
        x = np.array([*rng.uniform(0.01, 0.2, 2), rng.uniform(0.1, 0.7), *rng.uniform(0.02, 0.3, 4)])
        M = np.array([[x[2] + x[3], x[5]], [x[4], x[2] + x[6]]])
        if np.linalg.norm(M, 2) < 0.95:
            return x


def fd_gradient(f, x, rel=1e-6):
    g = np.empty_like(x)
    for j in range(x.size):
        h = rel * max(abs(x[j]), 1e-3)
        e = np.zeros_like(x)
        e[j] = h
        g[j] = (f(x + e) - f(x - e)) / (2 * h)
    return g


def test_wlse_score_vs_finite_differences(inp, report):
    rng = np.random.default_rng(5)
    pH, pL = report.phi_H_hat, report.phi_L_hat
    worst = 0.0
    for _ in range(20):
        x = random_interior(rng)
        g = wlse_gradient(x, inp, pH, pL)
        fd = fd_gradient(lambda z: wlse_objective(z, inp, pH, pL), x)
        worst = max(worst, np.linalg.norm(g - fd) / np.linalg.norm(fd))
    assert worst < 1e-5


def test_leg_score_vs_finite_differences(inp):
    rng = np.random.default_rng(6)
    for leg in ("H", "L"):
        for _ in range(5):
            p = np.array([rng.uniform(0.01, 0.2), rng.uniform(0.1, 0.6), *rng.uniform(0.02, 0.3, 2)])
            g = leg_qmle_score(p, inp, leg)
            fd = fd_gradient(lambda z: leg_qmle_objective(z, inp, leg), p)
            assert np.linalg.norm(g - fd) / np.linalg.norm(fd) < 1e-5


def test_report_invariants(report, inp):
    assert report.converged
    assert report.phi_H_hat > 0 and report.phi_L_hat > 0
    cov = np.array(report.cov)
    assert np.allclose(cov, cov.T, rtol=0, atol=1e-20)
    assert np.linalg.eigvalsh(cov).min() >= -1e-10 * max(1.0, np.abs(cov).max())
    # reported objective equals the untransformed objective at the returned point
    x = report.theta_g_hat.as_array()
    assert abs(report.objective - wlse_objective(x, inp, report.phi_H_hat, report.phi_L_hat)) <= 1e-10
    json.dumps(report.to_dict())
    assert report.optimizer["spectral_norm"] < 1


def test_maximizer_dominance(report, inp):
    pH, pL = report.phi_H_hat, report.phi_L_hat
    best = report.objective
    assert best >= wlse_objective(TG0.as_array(), inp, pH, pL)
    tH, tL = np.array(report.thetaH_hat), np.array(report.thetaL_hat)
    for g in (tH[1], tL[1]):
        x = np.array([tH[0], tL[0], g, tH[2], tL[2], tH[3], tL[3]])
        M = np.array([[x[2] + x[3], x[5]], [x[4], x[2] + x[6]]])
        if np.linalg.norm(M, 2) < 1:
            assert best >= wlse_objective(x, inp, pH, pL)
    assert best >= wlse_objective(merge_start(tH, tL, pH, pL, Bounds()), inp, pH, pL)


def test_step1_beats_truth(inp):
    rH, rL = step1_qmle(inp)
    assert rH.fun >= leg_qmle_objective(TG0.leg_H(), inp, "H")
    assert rL.fun >= leg_qmle_objective(TG0.leg_L(), inp, "L")


def test_phi_scale_invariance(inp, report):
    pH, pL = report.phi_H_hat, report.phi_L_hat
    x = report.theta_g_hat.as_array()
    assert wlse_objective(x, inp, 3 * pH, 3 * pL) == pytest.approx(
        wlse_objective(x, inp, pH, pL) / 3, rel=1e-13)
    start = TG0.as_array()
    a = wlse(inp, pH, pL, start, settings=OptimizerSettings(n_starts=1))
    b = wlse(inp, 2 * pH, 2 * pL, start, settings=OptimizerSettings(n_starts=1))
    assert np.allclose(a.x, b.x, rtol=1e-4, atol=1e-7)


def test_per_leg_weight_is_inverse_phi(inp):
    x = TG0.as_array()
    hH, hL = ogi_legs(TG0, inp.rv, inp.ov, LAM, inp.init_H, inp.init_L)
    sH = np.mean((inp.rv - LAM * hH[:-1]) ** 2)
    sL = np.mean((inp.ov - (1 - LAM) * hL[:-1]) ** 2)
    for a, b in ((1e-9, 1e-8), (4e-9, 1e-8), (1e-9, 3e-7)):
        assert wlse_objective(x, inp, a, b) == pytest.approx(-(sH / a + sL / b), rel=1e-12)


def test_residual_variances_hand():
    inp = FilterInput([0.3, 0.2, 0.5], [0.04, 0.01, 0.02], 0.25, h0H=1.0, h0L=0.1)
    pH, pL = residual_variances(inp, (0.6, 0.0, 0.0, 0.0), (0.05, 0.0, 0.0, 0.0))
    assert pH == pytest.approx(((0.3 - 0.25) ** 2 + (0.2 - 0.15) ** 2 + (0.5 - 0.15) ** 2) / 3, rel=1e-14)
    assert pL == pytest.approx(((0.04 - 0.075) ** 2 + (0.01 - 0.0375) ** 2 + (0.02 - 0.0375) ** 2) / 3,
                               rel=1e-14)


def test_wlse_rejects_degenerate():
    n = 60
    inp = FilterInput(np.full(n, 0.25), np.full(n, 0.5), 0.25, h0H=1.0, h0L=2 / 3)
    # constant proxies are fitted exactly by a constant filter
    pH, pL = residual_variances(inp, (1.0, 0.0, 0.0, 0.0), (2 / 3, 0.0, 0.0, 0.0))
    assert pH == 0.0 and pL < 1e-30
    with pytest.raises(OgiError):
        wlse(inp, pH, 1.0)
    with pytest.raises(OgiError, match="singular"):
        wlse(inp, 1.0, 1.0)
    with pytest.raises(OgiError):
        wlse(inp, -1.0, 1.0)


def test_min_days(inp):
    with pytest.raises(OgiError):
        fit_ogi(inp.slice(0, 20))


def test_sandwich_scales_with_n(report, inp):
    # evaluated at the interior true point; this path's estimate has alpha_Lg
    # on its lower bound, where the Hessian is poorly conditioned
    x = TG0.as_array()
    pH, pL = report.phi_H_hat, report.phi_L_hat
    c1 = sandwich_cov(inp, x, pH, pL)
    dbl = FilterInput(np.tile(inp.rv, 2), np.tile(inp.ov, 2), LAM, h0H=inp.init_H, h0L=inp.init_L)
    c2 = sandwich_cov(dbl, x, pH, pL)
    ratio = np.diag(c2) / np.diag(c1)
    assert np.all(np.abs(ratio - 0.5) < 0.1)


def test_z_statistic_cases():
    n = 400
    cov = np.eye(7) / n
    g = np.eye(7)[0]
    T, p = z_statistic(0.3, g, cov, 0.25)
    assert T == pytest.approx(math.sqrt(n) * 0.05, rel=1e-14)
    T, p = z_statistic(0.3, g, cov, 0.3)
    assert T == 0.0 and p == 1.0
    with pytest.raises(OgiError):
        z_statistic(0.3, np.zeros(7), cov, 0.3)


def test_aggregate_jacobian_matches_fd():
    x = TG0.as_array()
    for conv in ("main", "A1c"):
        J = aggregate_jacobian(x, LAM, conv)
        fd = np.column_stack([fd_gradient(lambda z: aggregate_vector(z, LAM, conv)[i], x)
                              for i in range(4)]).T
        assert np.allclose(J, fd, rtol=1e-7, atol=1e-9)


def test_optimizer_trace_monotone_and_box():
    def obj(x):
        return -np.sum((x - 0.3) ** 2) - 0.1 * np.sum(np.cos(7 * x))

    res = maximize(obj, np.full(4, 0.9), np.zeros(4), np.ones(4), settings=OptimizerSettings(seed=3))
    assert np.all(np.diff(res.trace) >= 0)
    assert np.all((res.x > 0) & (res.x < 1))
    assert res.fun == pytest.approx(obj(res.x), abs=1e-12)


def test_phi_H_below_phi_L_on_most_seeds():
    wins = 0
    for seed in range(9):
        r = replicate(200 + seed, n_days=300, m_all=4320)
        i = r.inputs(300)
        rH, rL = step1_qmle(i, settings=OptimizerSettings(n_starts=1))
        pH, pL = residual_variances(i, rH.x, rL.x)
        wins += pH < pL
    assert wins >= 5


# --- competitors -------------------------------------------------------------

def _garch_input(seed, n, w, g, b):
    rng = np.random.default_rng(seed)
    r = np.empty(n)
    h = w / (1 - g - b)
    for t in range(n):
        r[t] = math.sqrt(h) * rng.standard_normal()
        h = w + g * h + b * r[t] ** 2
    return FilterInput(np.ones(n), np.zeros(n), LAM, session_ret=r, overnight_ret=np.zeros(n))


def test_garch_recovers_truth():
    inp = _garch_input(9, 2000, 0.1, 0.8, 0.1)
    f = fit_competitor("garch", inp)
    assert np.all(np.abs(f.params - [0.1, 0.8, 0.1]) < 0.05)


def test_constant_proxy_closed_form(inp):
    f = fit_competitor("rgarch", inp, fixed={1: 0.0, 2: 0.0})
    assert f.params[0] == pytest.approx(np.mean(inp.rv[1:]), rel=1e-6)
    res = minimize_scalar(lambda w: -leg_qmle_objective((w, 0, 0, 0), inp, "H"),
                          bounds=(1e-8, 1.0), method="bounded", options=dict(xatol=1e-12))
    assert res.x == pytest.approx(np.mean(inp.rv[1:]) / LAM, rel=1e-6)


def test_a_ogi_without_overnight_equals_realized_garch(rep):
    base = rep.inputs(300)
    inp = FilterInput(base.rv, np.zeros(base.n), LAM)
    a = fit_competitor("a-ogi", inp, fixed={3: 1e-6})
    r = fit_competitor("rgarch", inp)
    assert a.params[2] / (1 - LAM) == pytest.approx(r.params[2], rel=1e-4)
    assert np.allclose(a.fitted, r.fitted, rtol=1e-5)
    assert a.forecast == pytest.approx(r.forecast, rel=1e-5)


@pytest.mark.parametrize("kind", MODEL_NAMES)
def test_every_model_fits_and_refilters(kind, rep):
    inp = rep.inputs(200)
    f = fit_competitor(kind, inp, OptimizerSettings(n_starts=2))
    assert np.isfinite(f.forecast) and f.forecast > 0
    assert f.fitted.size == inp.n and np.all(f.fitted > 0)
    assert f.return_kind in ("oo", "oc")
    g = refilter(f, inp)
    assert g.forecast == pytest.approx(f.forecast, rel=1e-9)
    assert np.allclose(g.fitted, f.fitted, rtol=1e-9)


def test_unknown_model(inp):
    with pytest.raises(OgiError):
        fit_competitor("nope", inp)
