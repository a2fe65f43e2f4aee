"""Prime counting, splitting densities, trend verdicts, and ring construction."""

import math
from fractions import Fraction

import pytest

from deflab.kernels import primes_upto
from deflab.density import (
    DECREASING,
    INCONCLUSIVE,
    CyclicFieldRule,
    build_W,
    count_primes,
    curve_order_bound_check,
    cyclic_degree_one_density,
    cyclic_density_report,
    format_ratio,
    hasse_check,
    hasse_table_check,
    quadratic_lift_check,
    quadratic_split_density,
    smallest_cyclic_rule,
    split_density_report,
    trend_verdict,
    v_density,
)


def test_count_primes():
    assert count_primes(10) == 4
    assert count_primes(100) == 25
    assert count_primes(10**6) == 78498
    assert count_primes(1) == 0


def test_format_ratio_exact_decimal():
    assert format_ratio(Fraction(1, 3)) == "0.333333"
    assert format_ratio(Fraction(1, 2)) == "0.500000"
    assert format_ratio(Fraction(-1, 8), places=3) == "-0.125"
    assert format_ratio(Fraction(2, 3), places=2) == "0.67"  # rounds half away
    assert format_ratio(Fraction(0)) == "0.000000"


def test_trend_verdict_cases():
    assert trend_verdict([Fraction(1, 2), Fraction(1, 4), Fraction(1, 8)]) == DECREASING
    assert trend_verdict([Fraction(1), Fraction(1), Fraction(1)]) == INCONCLUSIVE
    assert trend_verdict([Fraction(1, 2), Fraction(1, 4), Fraction(1, 3)]) == INCONCLUSIVE
    assert trend_verdict([]) == INCONCLUSIVE
    assert trend_verdict([Fraction(1, 2)]) == INCONCLUSIVE
    # an exact zero tail is decisive no matter how short
    assert trend_verdict([Fraction(1, 2), Fraction(0)]) == DECREASING


def test_hasse_check():
    assert hasse_check(2, 1, 5)  # 2 < 15
    assert hasse_check(11, 1, 1436582649813763)
    assert not hasse_check(2, 10, 11)  # 1024 >= 33
    with pytest.raises(ValueError):
        hasse_check(4, 1, 5)  # ell must be prime
    with pytest.raises(ValueError):
        hasse_check(2, 0, 5)
    with pytest.raises(ValueError):
        hasse_check(2, 1, 6)


def test_hasse_table(vtable):
    rows = hasse_table_check(vtable)
    assert len(rows) == len(vtable.entries)
    assert all(r["ok"] for r in rows)


def test_curve_order_bounds():
    rep = curve_order_bound_check(0, -2, p_max=200)
    assert rep["pass"]
    assert rep["violations"] == []
    assert rep["checked"] >= 40


def test_v_density_on_table(vtable):
    rep = v_density(frozenset(vtable.primes()), (10**3, 10**4, 10**5))
    assert rep.verdict == DECREASING
    # members {5, 19, 383} then {.., 2069} then no more below 10^5
    assert rep.counts == ((3, 168), (4, 1229), (4, 9592))
    assert rep.ratios[0] == Fraction(3, 168)
    assert rep.final_ratio() == Fraction(4, 9592)
    assert rep.fitted_constant is not None
    # shape: the final ratio sits under the sqrt-count prediction
    x = rep.x_grid[-1]
    c_tilde = rep.fitted_constant
    assert rep.final_ratio() < 10 * c_tilde * math.sqrt(x) * math.log(x) / x


def test_v_density_empty_and_full():
    empty = v_density(frozenset(), (100, 1000))
    assert [m for m, _ in empty.counts] == [0, 0]
    assert empty.verdict == DECREASING  # exact zero tail
    all_primes = frozenset(int(p) for p in primes_upto(10**4))
    full = v_density(all_primes, (10**2, 10**3, 10**4))
    assert full.ratios == (Fraction(1), Fraction(1), Fraction(1))
    assert full.verdict == INCONCLUSIVE


def test_density_report_serialization(vtable):
    rep = v_density(frozenset(vtable.primes()), (10**3, 10**4, 10**5))
    d = rep.to_dict()
    assert d["verdict"] == DECREASING
    assert d["ratios_exact"] == ["1/56", "4/1229", "1/2398"]
    assert d["counts"] == [[3, 168], [4, 1229], [4, 9592]]
    csv = rep.to_csv()
    lines = csv.strip().splitlines()
    assert lines[0] == "X,members,primes,ratio"
    assert lines[1].startswith("1000,3,168,")


def test_grid_validation(vtable):
    with pytest.raises(ValueError):
        v_density(frozenset(), ())
    with pytest.raises(ValueError):
        v_density(frozenset(), (100, 100))
    with pytest.raises(ValueError):
        v_density(frozenset(), (100, 10))
    with pytest.raises(ValueError):
        v_density(frozenset(), (1,))


def test_quadratic_split_density_hand_count():
    # primes <= 30: 2,3,7,13,17,23 inert; 11,19,29 split; 5 ramified
    assert quadratic_split_density(5, 30) == Fraction(4, 10)


def test_quadratic_split_density_limit():
    val = quadratic_split_density(5, 10**6)
    # binomial five-sigma window around 1/2
    n = count_primes(10**6)
    sigma = 0.5 / math.sqrt(n)
    assert abs(float(val) - 0.5) < 5 * sigma


def test_quadratic_split_density_rejects_squares():
    with pytest.raises(ValueError):
        quadratic_split_density(4, 100)
    with pytest.raises(ValueError):
        quadratic_split_density(0, 100)
    # negative discriminants are legitimate
    assert quadratic_split_density(-1, 10**4) > Fraction(2, 5)


def test_split_density_report():
    rep = split_density_report(5, (10**3, 10**4, 10**5))
    assert rep.label == "split-or-ramified-sqrt(5)"
    assert rep.counts[0] == (79, 168)  # split or ramified primes up to 1000
    assert rep.ratios[0] == Fraction(79, 168)


def test_cyclic_rule():
    rule = CyclicFieldRule(5, 11)
    assert rule.has_degree_one_factor(11)  # totally ramified: f = 1
    assert rule.has_degree_one_factor(43)  # 43^2 = 1 mod 11
    assert not rule.has_degree_one_factor(3)  # 3^2 = 9 mod 11
    with pytest.raises(ValueError):
        CyclicFieldRule(5, 13)  # 13 != 1 mod 5
    with pytest.raises(ValueError):
        CyclicFieldRule(4, 13)
    assert smallest_cyclic_rule(5).q == 11
    assert rule.to_ring_rule().contains(3)


def test_cyclic_degree_one_density_limit():
    rule = CyclicFieldRule(5, 11)
    val = cyclic_degree_one_density(rule, 10**6)
    n = count_primes(10**6)
    p = 0.2
    sigma = math.sqrt(p * (1 - p) / n)
    assert abs(float(val) - p) < 5 * sigma
    rep = cyclic_density_report(rule, (10**4, 10**5))
    assert rep.label == "degree-one-cyclic(p=5,q=11)"
    assert rep.verdict in (DECREASING, INCONCLUSIVE)


def test_quadratic_lift_check():
    out = quadratic_lift_check(frozenset({5, 19, 383, 2069}), 5, 10**4)
    assert out["identity_ok"]
    assert out["bound_ok"]
    assert out["rational_members"] == 4
    assert out["lifted_members"] <= 2 * out["rational_members"]
    assert out["field_primes"] == out["field_primes_bulk"]


def test_build_w_quadratic_branch(ctx, budget, cache):
    con = build_W(Fraction(3, 5), ctx, budget=budget, cache=cache)
    assert con.ok
    assert con.spec.rule.kind == "quadratic-inert"
    assert con.report.final_ratio() >= Fraction(2, 5)
    assert all(c["holds"] for c in con.conditions)


def test_build_w_cyclic_branch(ctx, budget, cache):
    con = build_W(Fraction(1, 4), ctx, budget=budget, cache=cache)
    assert con.ok
    assert con.spec.rule.kind == "cyclic-no-degree-one"
    assert con.spec.rule.p == 5 and con.spec.rule.q == 11
    assert con.report.final_ratio() >= Fraction(3, 4)
    # the excluded primitive-divisor table stays outside W
    for p in (5, 19, 383, 2069):
        assert not con.spec.contains_prime(p)


def test_build_w_trivial_epsilon(ctx, budget, cache):
    con = build_W(Fraction(1), ctx, budget=budget, cache=cache)
    assert con.spec.rule is None
    assert sorted(con.spec.include) == [2, 3]


def test_build_w_epsilon_domain(ctx):
    with pytest.raises(ValueError):
        build_W(Fraction(0), ctx)
    with pytest.raises(ValueError):
        build_W(Fraction(3, 2), ctx)
