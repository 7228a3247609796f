import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from eval_properties import (check_coverage, check_dm, check_mspe_shift, check_qlike_minimum,
                             check_utility, check_var_monotone, hit_cases, loss_pairs, var_cases)
from ogivol import evaluation as ev
from ogivol.core import OgiError


def test_mspe_qlike_hand():
    v = np.array([1.0, 2.0, 4.0])
    r = np.array([1.5, 2.0, 3.0])
    assert ev.mspe(v, r) == pytest.approx((0.25 + 0 + 1) / 3, rel=1e-15)
    assert ev.mspe(r, r) == 0.0
    want = (math.log(1) + 1.5 + math.log(2) + 1 + math.log(4) + 0.75) / 3
    assert ev.qlike(v, r) == pytest.approx(want, rel=1e-15)
    assert ev.qlike([1.0], [1.0]) == 1.0
    with pytest.raises(OgiError):
        ev.qlike([0.0], [1.0])
    with pytest.raises(OgiError):
        ev.mspe([1.0, 2.0], [1.0])


def test_dm_bartlett_hand():
    rng = np.random.default_rng(8)
    a = rng.gamma(2.0, 1.0, 20)
    b = rng.gamma(2.0, 1.0, 20)
    d = a - b
    u = d - d.mean()
    lag = 2  # floor(20^(1/3))
    g = [float(np.sum(u[j:] * u[:20 - j])) / 20 for j in range(lag + 1)]
    lrv = g[0] + 2 * (2 / 3) * g[1] + 2 * (1 / 3) * g[2]
    assert ev.bartlett_lrv(d, lag) == pytest.approx(lrv, rel=1e-13)
    s, p = ev.dm_test(a, b)
    assert s == pytest.approx(d.mean() / math.sqrt(lrv / 20), rel=1e-12)
    assert p == pytest.approx(math.erfc(abs(s) / math.sqrt(2)), rel=1e-12)
    with pytest.raises(OgiError, match="identical"):
        ev.dm_test(a, a)


def test_var_examples():
    S = np.array([-3.0, -1.0, 2.0, 0.5, -0.2, 1.1, -2.2, 0.0, 0.7, -0.6])
    # sorted: -3,-2.2,-1,-0.6,-0.2,0,0.5,0.7,1.1,2 ; linear position 0.2*9 = 1.8
    q = -2.2 + 0.8 * (-1.0 + 2.2)
    assert ev.standardized_quantile(S, np.ones(10), 0.2, min_n=10) == pytest.approx(q, rel=1e-14)
    v = 4.0
    got = ev.var_forecast(S * 2, np.full(10, v), 9.0, 0.2, min_n=10)
    assert got == pytest.approx(q * 3.0, rel=1e-14)
    with pytest.raises(OgiError):
        ev.var_forecast(S, np.ones(10), 1.0, 0.6, min_n=10)
    with pytest.raises(OgiError):
        ev.var_forecast(S, np.ones(10), 1.0, 0.05)


def test_lruc_cases():
    mp.mp.dps = 40
    n, x, q = 250, 20, mp.mpf("0.05")
    pi = mp.mpf(x) / n
    ref = -2 * ((n - x) * mp.log(1 - q) + x * mp.log(q) - (n - x) * mp.log(1 - pi) - x * mp.log(pi))
    h = np.zeros(250, dtype=int)
    h[:20] = 1
    r = ev.lruc(h, 0.05)
    assert r.stat == pytest.approx(float(ref), abs=1e-10)
    assert float(ref) == pytest.approx(4.039520476139181, abs=1e-12)
    h = np.zeros(100, dtype=int)
    h[:5] = 1
    r = ev.lruc(h, 0.05)
    assert r.stat == pytest.approx(0.0, abs=1e-12) and r.p_value == pytest.approx(1.0)
    r = ev.lruc(np.zeros(100, dtype=int), 0.05)
    assert r.corrected and r.stat > 0


def test_alternating_hits_dependence():
    h = np.tile([0, 1], 50)
    uc, ind, cc = ev.lruc(h, 0.5), ev.lrind(h), ev.lrcc(h, 0.5)
    assert uc.stat == pytest.approx(0.0, abs=1e-12)
    assert ind.stat > 50 and ind.p_value < 1e-10
    assert cc.stat >= uc.stat


def test_hits_validation():
    with pytest.raises(OgiError):
        ev.lruc(np.array([0, 2] * 30), 0.05)
    with pytest.raises(OgiError):
        ev.lruc(np.zeros(10, dtype=int), 0.05)
    assert list(ev.hits([-2.0, 0.0, -1.0], [-1.0, -1.0, -1.0])) == [1, 0, 0]


def test_allocation_and_utility_hand():
    assert ev.mv_allocation(-0.01, 1e-4, 2.5) == 0.0
    assert ev.mv_allocation(3 * 2.5 * 1e-4, 1e-4, 2.5) == 1.0
    assert ev.mv_allocation(0.5 * 5 * 1e-4, 1e-4, 5) == pytest.approx(0.5)
    r = np.array([0.01, -0.02, 0.015, 0.005, -0.005])
    mean = 0.005 / 5
    var = sum((v - mean) ** 2 for v in r) / 4
    assert ev.sharpe(r) == pytest.approx(mean / math.sqrt(var), rel=1e-13)
    assert ev.expected_utility(r, 5.0) == pytest.approx(mean - 2.5 * var, rel=1e-13)
    with pytest.raises(OgiError):
        ev.sharpe(np.ones(5))


def test_persistence_regression_cases():
    rng = np.random.default_rng(3)
    v = rng.gamma(2.0, 1.0, 200)
    res = ev.persistence_regression(0.1 + 2.0 * v, v)
    assert res.coef == pytest.approx((0.1, 2.0))
    assert np.all(res.acf == 0.0) and res.acf.size == 30
    e = np.empty(1000)
    e[0] = 0.0
    for t in range(1, 1000):
        e[t] = 0.5 * e[t - 1] + rng.normal()
    v = rng.gamma(2.0, 1.0, 1000)
    res = ev.persistence_regression(1.0 + v + e, v)
    assert abs(res.lag1 - 0.5) < 0.1
    assert ev.acf(e, 3)[0] == 1.0
    with pytest.raises(OgiError):
        ev.persistence_regression(v[:100], np.ones(100))
    with pytest.raises(OgiError):
        ev.persistence_regression(v[:30], v[:30])


@given(hit_cases())
def test_coverage_invariants(case):
    check_coverage(case)


@given(loss_pairs())
def test_dm_invariants(case):
    check_dm(case)


@given(var_cases())
def test_var_monotone(case):
    check_var_monotone(case)


@given(st.floats(-1, 1), st.floats(1e-8, 1), st.floats(0.1, 10), st.integers(0, 2 ** 32 - 1))
def test_utility_invariants(er, var, xi, seed):
    check_utility(er, var, xi, seed)


@given(st.integers(0, 2 ** 32 - 1), st.floats(-10, 10))
def test_mspe_shift(seed, c):
    check_mspe_shift(seed, c)


@given(st.floats(1e-3, 1e3))
def test_qlike_minimum(r):
    check_qlike_minimum(r)
