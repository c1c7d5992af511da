from fractions import Fraction as F

import pytest
from hypothesis import given
from hypothesis import strategies as st

from parastab.exponents import (
    CASES,
    INF,
    ExponentQuery,
    default_p_star,
    exponent_table,
    fmt,
    gamma_bounds,
    gamma_tilde_p,
    lip_admissible,
    overlap_check,
    p_gamma_high,
    p_gamma_low,
    q_gamma,
    q_gamma_high,
    q_gamma_low,
    rational,
    recip,
    weakev_thresholds,
)

HALF = F(1, 2)
rationals = st.fractions(min_value=F(1, 10), max_value=F(10), max_denominator=60)


def Q(**kw):
    return ExponentQuery(**kw)


def test_rational_parsing_and_infinity():
    assert rational("3/2") == F(3, 2) and rational(4) == 4
    assert rational("inf") is INF and rational(float("inf")) is INF
    with pytest.raises(TypeError):
        rational(0.5)
    assert recip(INF) == 0 and recip(0) is INF
    assert INF > F(10**9) and not INF < 3 and INF == INF
    assert fmt(F(6)) == "6/1" and fmt(INF) == "inf" and fmt(None) == ""


def test_query_validation():
    assert Q(d=3).p_star == 6 and Q(d=1).p_star is INF and default_p_star(2) is None
    with pytest.raises(ValueError):
        Q(d=2)
    assert Q(d=2, p_star=8).p_star == 8
    with pytest.raises(ValueError):
        Q(d=0)
    with pytest.raises(ValueError):
        Q(d=3, p_star=2)
    with pytest.raises(ValueError):
        Q(d=3, sigma=0)
    with pytest.raises(ValueError):
        Q(d=3, r=F(1, 2))


def test_q_gamma_examples():
    assert q_gamma_low(Q(d=3, gamma=HALF)) == F(6, 5)
    assert q_gamma_low(Q(d=7, gamma=0)) == 2
    assert q_gamma_low(Q(d=4, gamma=F(1, 4))) == F(8, 5)
    assert q_gamma_high(Q(d=3, p=12, gamma=1)) == F(12, 11)
    assert q_gamma_high(Q(d=3, p=12, gamma=HALF)) == F(6, 5)
    assert q_gamma_high(Q(d=3, p=12, gamma=F(3, 4))) == F(8, 7)
    with pytest.raises(ValueError):
        q_gamma_low(Q(d=3, gamma=F(3, 4)))
    with pytest.raises(ValueError):
        q_gamma_high(Q(d=3, p=INF, gamma=F(3, 4)))


def test_p_gamma_examples():
    assert p_gamma_low(Q(d=3, p=12, gamma=0)) == 12
    assert p_gamma_high(Q(d=3, gamma=1)) == 2
    assert p_gamma_high(Q(d=3, gamma=F(3, 4))) == 3


@given(st.integers(3, 12), st.sampled_from([F(0), F(1, 4), F(1, 2)]))
def test_q_gamma_closed_form(d, g):
    assert q_gamma(Q(d=d, gamma=g)) == F(2 * d) / (d + 4 * g)


@given(st.integers(3, 12), st.integers(1, 40))
def test_p_gamma_high_displayed_formula(d, k):
    # the displayed formula reduces to 2d/(d + 4 gamma - 4) under the default p*
    g = HALF + F(k, 80)
    assert p_gamma_high(Q(d=d, gamma=g)) == F(2 * d) / (d + 4 * g - 4)


@given(st.integers(3, 9), rationals)
def test_consistency_at_one_half(d, extra):
    q = Q(d=d, p=F(2 * d, d - 2) + extra, gamma=HALF)
    ps = q.p_star
    assert q_gamma_low(q) == q_gamma_high(q) == ps / (ps - 1)
    assert p_gamma_low(q) == p_gamma_high(q) == ps


def test_gamma_bounds_examples():
    w = gamma_bounds(Q(d=3, sigma=2, r=4), "W1")
    assert (w.gamma0, w.gamma1, w.lower, w.upper) == (F(-1, 4), F(-1, 8), 0, HALF) and w.feasible
    l = gamma_bounds(Q(d=3, p=12, sigma=F(3, 2), r=8), "L2p")
    assert (l.gamma0, l.gamma1, l.lower, l.upper) == (0, F(-3, 4), HALF, 1) and l.feasible
    edge = gamma_bounds(Q(d=3, sigma=5, r=4), "W1")
    assert edge.gamma0 == HALF and not edge.feasible
    assert [v.name for v in edge.violations] == ["sigma-W1"]


def test_l2_case_convention():
    ok = gamma_bounds(Q(d=3, sigma=F(4, 3), r=3), "L2")
    assert (ok.gamma0, ok.gamma1, ok.lower) == (HALF, HALF, HALF) and ok.feasible
    bad = gamma_bounds(Q(d=3, sigma=2, r=2), "L2")
    assert {v.name for v in bad.violations} == {"r-L2", "sigma-L2"}
    assert gamma_bounds(Q(d=1, sigma=2, r=2), "L2").feasible
    assert not gamma_bounds(Q(d=2, p_star=8, sigma=2, r=4), "L2").feasible


def test_l2p_needs_p_above_p_star():
    gb = gamma_bounds(Q(d=3, p=5, sigma=1, r=8), "L2p")
    assert not gb.feasible and gb.violations[0].name == "p-range"


@given(st.integers(3, 10), rationals, st.integers(1, 30))
def test_w1_matches_original_formulas(d, sigma, r):
    # gamma0 = (2 sigma - p*)/(2p* - 4), gamma1 = p*/(r(p* - 2)) - 1/2, and their d-forms
    gb = gamma_bounds(Q(d=d, sigma=sigma, r=r), "W1")
    ps = F(2 * d, d - 2)
    assert gb.gamma0 == (2 * sigma - ps) / (2 * ps - 4) == ((d - 2) * sigma - d) / 4
    assert gb.gamma1 == ps / (r * (ps - 2)) - HALF == (F(d, r) - 1) / 2


@given(st.integers(3, 8), rationals, rationals, st.integers(3, 40))
def test_l2p_matches_original_formulas(d, sigma, extra, r):
    ps = F(2 * d, d - 2)
    p = ps + extra
    gb = gamma_bounds(Q(d=d, p=p, sigma=sigma, r=r), "L2p")
    assert gb.gamma0 == ((sigma - 2) * ps * p - 2 * ps + 4 * p) / (4 * (p - ps))
    assert gb.gamma1 == (2 * p * ps - r * (p * ps + 2 * ps - 4 * p)) / (4 * (p - ps) * r)


@given(st.fractions(min_value=F(1, 10), max_value=F(20), max_denominator=50),
       st.fractions(min_value=F(21, 10), max_value=F(30), max_denominator=50))
def test_gamma0_half_iff_sigma_below(sigma, ps):
    gb = gamma_bounds(Q(d=4, p_star=ps, sigma=sigma, r=100), "W1")
    assert (gb.gamma0 < HALF) == (sigma < ps - 1)


def test_weakev_examples():
    assert gamma_tilde_p(Q(d=5, p=10, r=4)) == F(3, 8) == 1 - F(5, 8)
    assert weakev_thresholds(Q(d=3, r=3)).gamma_tilde_0 == HALF
    assert weakev_thresholds(Q(d=3, r=F(5, 2))).gamma_tilde_inf == F(3, 10)
    assert weakev_thresholds(Q(d=3, r=INF)).gamma_tilde_0 == 1
    with pytest.raises(ValueError):
        gamma_tilde_p(Q(d=5, p=10, r=6))


@given(st.integers(3, 9), st.fractions(min_value=F(1), max_value=F(20), max_denominator=30))
def test_gamma_tilde_zero_default(d, r):
    assert weakev_thresholds(Q(d=d, r=r)).gamma_tilde_0 == 1 - F(d) / (2 * r)


def test_overlap_examples():
    no = overlap_check(Q(d=6, r=5, sigma=2))
    assert not no.holds and "19/10" in no.reason
    yes = overlap_check(Q(d=6, r=5, sigma=F(9, 5)))
    assert yes.holds and yes.witness == F(3, 10) and yes.ceiling == F(2, 5)
    gb = gamma_bounds(Q(d=6, r=5, sigma=F(9, 5)), "W1")
    assert yes.witness == max(gb.gamma0, gb.gamma1)
    assert not overlap_check(Q(d=3, r=2, sigma=1)).holds
    with pytest.raises(ValueError):
        overlap_check(Q(d=1, r=2, sigma=1))


def test_lip_examples():
    ll2 = lip_admissible(Q(d=3, sigma=F(5, 3)), "LL2")
    assert ll2.p_tilde == 2 and ll2.sigma_bound == F(5, 3) and ll2.admissible
    assert ll2.holder_limit == F(5, 3)
    lw1 = lip_admissible(Q(d=3, sigma=4), "LW1")
    assert lw1.p_tilde == 6 and lw1.sigma_bound == 5 and lw1.admissible
    assert not lip_admissible(Q(d=3, sigma=5), "LW1").admissible
    assert lip_admissible(Q(d=1, sigma=2), "LL2").sigma_bound == 2


@given(st.integers(3, 8), st.fractions(min_value=F(1, 10), max_value=F(8), max_denominator=40),
       st.sampled_from(["LL2", "LW1"]))
def test_holder_gate_at_admissible_gamma(d, sigma, case):
    rep = lip_admissible(Q(d=d, sigma=sigma), case)
    if rep.admissible:
        assert sigma <= rep.holder_limit


@given(st.integers(3, 8), rationals, st.integers(2, 30))
def test_float_reevaluation(d, sigma, r):
    q = Q(d=d, sigma=sigma, r=r)
    gb = gamma_bounds(q, "W1")
    ps = 2 * d / (d - 2)
    assert abs(float(gb.gamma0) - (2 * float(sigma) - ps) / (2 * ps - 4)) <= 1e-14
    assert abs(float(gb.gamma1) - (ps / (r * (ps - 2)) - 0.5)) <= 1e-14
    g = float(F(1, 3))
    assert abs(float(q_gamma(q, F(1, 3))) - 1 / (0.5 + g - 2 * g / ps)) <= 1e-14


def test_table_rows_are_strings():
    rows = exponent_table(Q(d=3, sigma=2, r=4, gamma=HALF))
    assert [r["case"] for r in rows] == list(CASES)
    assert all(r["q_gamma"] == "6/5" for r in rows)
    assert all(isinstance(v, str) for r in rows for v in r.values())
