"""The denominator divisibility sequence and its verified properties."""

import math
from fractions import Fraction

import pytest

from deflab.arith import vp
from deflab.eds import (
    build_V,
    compute_kappa,
    compute_m0,
    denominator,
    eds_record,
    estimate_C,
    growth_rate,
    primitive_divisor,
    sn_set,
    verify_bigger_support,
    verify_divisibility_bridge,
    verify_m1,
    verify_order_change,
    verify_square_denominators,
    verify_strong_divisibility,
    verify_subgroup,
)
from deflab.errors import PreconditionError


def test_ground_truth_coordinates(ctx):
    assert ctx.point(2).x == Fraction(129, 100)
    assert ctx.point(3).x == Fraction(164323, 29241)


def test_ground_truth_support_sets(ctx, budget, cache):
    assert sn_set(ctx, 1, budget, cache) == (frozenset(), True)
    assert sn_set(ctx, 2, budget, cache) == (frozenset({5}), True)
    assert sn_set(ctx, 3, budget, cache) == (frozenset({19}), True)


def test_denominators_start(ctx):
    # good parts: the bad primes 2 and 3 are stripped
    assert denominator(ctx, 1) == 1
    assert denominator(ctx, 2) == 25  # x_2 = 129/100, 100 = 2^2 * 5^2
    assert denominator(ctx, 3) == 361  # x_3 = .../29241, 29241 = 3^4 * 19^2
    with pytest.raises(ValueError):
        denominator(ctx, 0)


def test_record_fields(ctx, budget, cache):
    rec = eds_record(ctx, 5, budget, cache)
    assert rec.n == 5
    assert rec.complete
    assert rec.d_n == denominator(ctx, 5) == 160280942564521
    assert rec.d_valuations == ((29, 2), (211, 2), (2069, 2))
    prod = 1
    for q, e in rec.d_valuations:
        assert q not in ctx.bad_primes
        assert vp(rec.d_n, q) == e
        prod *= q**e
    assert prod == rec.d_n
    assert rec.support == frozenset({29, 211, 2069})
    d = rec.to_dict()
    assert d["n"] == 5 and d["complete"] is True


def test_square_denominators(ctx, budget, cache):
    rep = verify_square_denominators(ctx, 12)
    assert rep.passed and rep.complete


def test_strong_divisibility_small(ctx):
    rep = verify_strong_divisibility(ctx, 12)
    assert rep.passed
    # the identity behind it, spot-checked directly
    d4, d6, d2 = denominator(ctx, 4), denominator(ctx, 6), denominator(ctx, 2)
    assert math.gcd(d4, d6) == d2


def test_order_change_examples(ctx, budget, cache):
    rep = verify_order_change(ctx, 2, 5, budget, cache)
    assert rep.passed and rep.complete
    rows = rep.details["primes_checked"]
    assert {"q": 5, "ord_n": 2, "ord_pn": 4, "expected": 4} in rows
    rep33 = verify_order_change(ctx, 3, 3, budget, cache)
    assert rep33.passed  # p = 3 is bad; good primes of d_3 keep their order
    assert all(r["ord_pn"] == r["ord_n"] for r in rep33.details["primes_checked"])


def test_order_change_requires_prime_multiplier(ctx, budget, cache):
    with pytest.raises(ValueError):
        verify_order_change(ctx, 2, 4, budget, cache)


def test_subgroup_structure(ctx):
    rep = verify_subgroup(ctx, 5, 1, 20)
    assert rep.passed
    assert rep.details["generator"] == 2
    assert rep.details["members"] == [2, 4, 6, 8, 10, 12, 14, 16, 18, 20]
    rep2 = verify_subgroup(ctx, 19, 1, 20)
    assert rep2.passed and rep2.details["generator"] == 3


def test_subgroup_rejects_bad_prime(ctx):
    with pytest.raises(PreconditionError):
        verify_subgroup(ctx, 3, 1, 10)


def test_bigger_support_small(ctx):
    rep = verify_bigger_support(ctx, bound=15)
    assert rep.passed
    assert rep.details["failures"] == []
    assert all(r["new_prime_part_digits"] >= 1 for r in rep.details["pairs"])


def test_estimate_C_and_m0(ctx):
    est = estimate_C(ctx, bound=25)
    assert est.C == 1
    assert est.m0 == 1
    assert est.failures == []
    assert compute_m0(1) == 1
    assert compute_m0(4) == 8 * 9  # 2^3 * 3^2


def test_kappa(ctx):
    assert compute_kappa(ctx) == Fraction(2)


def test_growth_window(ctx):
    rep = growth_rate(ctx, 15, 25)
    assert len(rep.rows) == 11
    assert rep.spread < 0.10
    assert rep.last_diff < rep.first_diff
    for row in rep.rows:
        assert row["ratio"] > 0
    with pytest.raises(ValueError):
        growth_rate(ctx, 5, 5)


def test_primitive_divisor_entries(ctx, budget, cache):
    res = primitive_divisor(ctx, 2, 1, budget, cache)
    assert res.prime == 5 and res.certified and res.exists
    res5 = primitive_divisor(ctx, 5, 1, budget, cache)
    assert res5.prime == 2069 and res5.certified
    res9 = primitive_divisor(ctx, 3, 2, budget, cache)
    assert res9.prime == 40032130339 and res9.certified


def test_v_table(vtable):
    assert vtable.all_certified
    assert vtable.primes() == frozenset(
        {5, 19, 383, 2069, 111721, 1487809, 40032130339, 1436582649813763}
    )
    assert len(vtable.entries) == 8  # prime powers up to 11


def test_m1_verification(ctx, budget, cache):
    rep = verify_m1(ctx, 1, l_max=3, k_max=3, budget=budget, cache=cache)
    assert rep.passed


def test_divisibility_bridge(ctx, budget, cache):
    rep = verify_divisibility_bridge(ctx, bound=10, budget=budget, cache=cache)
    assert rep.passed, rep.details
