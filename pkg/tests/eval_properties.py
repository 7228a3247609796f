"""Property checks for the evaluation metrics, shared by the unit and acceptance suites."""
import numpy as np
from hypothesis import assume
from hypothesis import strategies as st

from ogivol import evaluation as ev

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)
positive = st.floats(1e-6, 1e3, allow_nan=False, allow_infinity=False)


@st.composite
def hit_cases(draw):
    n = draw(st.integers(50, 400))
    p = draw(st.floats(0.0, 1.0))
    seed = draw(st.integers(0, 2 ** 32 - 1))
    q0 = draw(st.sampled_from(ev.Q0_LEVELS) | st.floats(0.001, 0.5))
    rng = np.random.default_rng(seed)
    h = (rng.random(n) < p).astype(int)
    var = -np.abs(rng.normal(1.0, 0.3, n))
    return h, q0, var


@st.composite
def loss_pairs(draw):
    n = draw(st.integers(10, 200))
    seed = draw(st.integers(0, 2 ** 32 - 1))
    rng = np.random.default_rng(seed)
    a = rng.gamma(2.0, 1.0, n)
    b = a + rng.normal(0, draw(st.floats(0.01, 2.0)), n)
    c = draw(st.floats(-100, 100))
    return a, b, c


@st.composite
def var_cases(draw):
    n = draw(st.integers(100, 300))
    seed = draw(st.integers(0, 2 ** 32 - 1))
    rng = np.random.default_rng(seed)
    r = rng.standard_t(5, n) * 0.01
    v = rng.uniform(0.5e-4, 2e-4, n)
    f = draw(st.floats(1e-6, 1e-2))
    return r, v, f


def check_coverage(case):
    h, q0, var = case
    uc, ind, cc = ev.lruc(h, q0), ev.lrind(h), ev.lrcc(h, q0)
    dq = ev.dq_test(h, q0, var)
    for r in (uc, ind, cc, dq):
        assert r.stat >= 0
        assert 0.0 <= r.p_value <= 1.0
    assert cc.stat == uc.stat + ind.stat
    assert cc.stat >= uc.stat


def check_dm(case):
    a, b, c = case
    assume(np.ptp(a - b) > 0)
    s1, p1 = ev.dm_test(a, b)
    s2, p2 = ev.dm_test(b, a)
    assert s1 == -s2 and p1 == p2
    assert 0 <= p1 <= 1
    s3, _ = ev.dm_test(a + c, b + c)
    assert abs(s3 - s1) <= 1e-6 * max(1.0, abs(s1))


def check_var_monotone(case):
    r, v, f = case
    vals = [ev.var_forecast(r, v, f, q) for q in sorted(ev.Q0_LEVELS)]
    assert all(x <= y for x, y in zip(vals, vals[1:]))
    assert ev.var_forecast(r, v, 2 * f, 0.05) == np.sqrt(2) * ev.var_forecast(r, v, f, 0.05) or abs(
        ev.var_forecast(r, v, 2 * f, 0.05) - np.sqrt(2) * ev.var_forecast(r, v, f, 0.05)) <= 1e-12 * abs(
        ev.var_forecast(r, v, f, 0.05))


def check_utility(er, var, xi, seed):
    x = ev.mv_allocation(er, var, xi)
    assert 0.0 <= x <= 1.0
    r = np.random.default_rng(seed).normal(0.0005, 0.01, 30)
    assert ev.expected_utility(r, xi) <= r.mean()


def check_mspe_shift(seed, c):
    rng = np.random.default_rng(seed)
    v = rng.gamma(2.0, 1.0, 40)
    r = rng.gamma(2.0, 1.0, 40)
    lhs = ev.mspe(v + c, r)
    rhs = ev.mspe(v, r) + 2 * c * np.mean(v - r) + c * c
    assert abs(lhs - rhs) <= 1e-9 * max(1.0, abs(rhs))


def check_qlike_minimum(r):
    def term(v):
        return float(ev.qlike_terms([v], [r])[0])

    h = 1e-4 * r
    assert term(r) <= term(r + h) and term(r) <= term(r - h)
    # derivative zero and second derivative positive at v = r
    d1 = (term(r + h) - term(r - h)) / (2 * h)
    d2 = (term(r + h) - 2 * term(r) + term(r - h)) / h ** 2
    assert abs(d1) <= 1e-6 / r
    assert d2 > 0
