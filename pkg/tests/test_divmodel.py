"""Ring membership, the divisibility model, and the subset equation system."""

from dataclasses import replace
from fractions import Fraction

import pytest

from deflab.arith import FactorBudget
from deflab.divmodel import (
    RingRule,
    RingSpec,
    SubsetBudget,
    SubsetSystemConfig,
    audit_inequalities,
    estimate_bound_constant,
    in_ring,
    model_add,
    model_divides,
    model_encode,
    subset_check,
    subset_construct,
)
from deflab.errors import (
    BudgetExhaustedError,
    IncompleteFactorizationError,
)


STANDARD_CFG = SubsetSystemConfig(
    D_prime=5, d=5, ells=(0, 1, 2), Z=5, c=Fraction(4, 5), kappa=Fraction(2)
)


def test_ring_rule_quadratic_inert():
    rule = RingRule(kind="quadratic-inert", D=5)
    assert rule.contains(2) and rule.contains(3) and rule.contains(7)
    assert not rule.contains(11)  # splits
    assert not rule.contains(5)  # ramifies


def test_ring_rule_cyclic():
    rule = RingRule(kind="cyclic-no-degree-one", p=5, q=11)
    assert not rule.contains(11)  # the ramified prime is never selected
    # degree-one primes r: r^((q-1)/p) = 1 mod q, e.g. 3^2 = 9 != 1, so 3 is in
    assert rule.contains(3) == (pow(3, 2, 11) != 1)
    assert not rule.contains(43)  # 43 = 10 mod 11, 10^2 = 1 mod 11


def test_ring_rule_validation():
    with pytest.raises(ValueError):
        RingRule(kind="nonsense")
    with pytest.raises(ValueError):
        RingRule(kind="quadratic-inert")  # missing D
    with pytest.raises(ValueError):
        RingRule(kind="cyclic-no-degree-one", p=5, q=13)  # q not 1 mod p


def test_ring_spec_membership(wspec):
    assert wspec.contains_prime(2) and wspec.contains_prime(3)  # included
    assert not wspec.contains_prime(5)  # excluded by the table
    assert not wspec.contains_prime(2069)  # excluded by the table
    assert wspec.contains_prime(7)  # inert
    assert not wspec.contains_prime(11)  # split, no rule membership


def test_ring_spec_rejects_overlap():
    with pytest.raises(ValueError):
        RingSpec(include=frozenset({5}), exclude=frozenset({5}), rule=None)


def test_in_ring(wspec, budget, cache):
    assert in_ring(7, wspec, budget, cache)
    assert in_ring(Fraction(1, 2), wspec, budget, cache)
    assert in_ring(Fraction(3, 14), wspec, budget, cache)
    assert not in_ring(Fraction(1, 5), wspec, budget, cache)
    assert not in_ring(Fraction(1, 11), wspec, budget, cache)


def test_in_ring_incomplete_denominator_raises(wspec):
    a = 2305843009213693951
    b = 618970019642690137449562111
    tiny = FactorBudget(trial_bound=100, rho_iterations=10, rho_restarts=1)
    with pytest.raises(IncompleteFactorizationError):
        in_ring(Fraction(1, a * b), wspec, tiny)


def test_model_encoding_roundtrip(ctx):
    e5 = model_encode(ctx, 1, 5)
    assert e5.value == ctx.point(5).x
    z = model_encode(ctx, 1, 0)
    assert z.is_zero
    s = model_add(ctx, 1, model_encode(ctx, 1, 2), model_encode(ctx, 1, 3))
    assert s.n == 5 and s.value == e5.value
    back_to_zero = model_add(ctx, 1, model_encode(ctx, 1, -4), model_encode(ctx, 1, 4))
    assert back_to_zero.is_zero


def test_model_divides_grid(ctx, wspec, budget, cache, vtable):
    for j in range(1, 11):
        for k in range(1, 11):
            verdict = model_divides(
                j, k, ctx, wspec, m0=1, budget=budget, cache=cache, v_table=vtable
            )
            assert verdict.divides == (k % j == 0), (j, k, verdict.certificate)


def test_model_divides_certificates(ctx, wspec, budget, cache, vtable):
    yes = model_divides(3, 12, ctx, wspec, budget=budget, cache=cache, v_table=vtable)
    assert yes.divides and yes.certificate["kind"] == "integer-divisibility"
    no = model_divides(5, 12, ctx, wspec, budget=budget, cache=cache, v_table=vtable)
    assert not no.divides
    assert no.certificate["kind"] == "witness-prime"
    assert no.certificate["witness"] == 29
    assert no.certificate["ord_bj"] == 2 and no.certificate["ord_bk"] == 0


def test_subset_config_validation():
    with pytest.raises(ValueError):
        replace(STANDARD_CFG, d=4)  # d^2 must exceed 4 D'
    with pytest.raises(ValueError):
        replace(STANDARD_CFG, ells=(0, 1))  # needs rn+1 shifts
    with pytest.raises(ValueError):
        replace(STANDARD_CFG, ells=(1, 2, 3))  # first shift must be 0
    with pytest.raises(ValueError):
        replace(STANDARD_CFG, Z=4)  # must exceed rn * kappa
    with pytest.raises(ValueError):
        replace(STANDARD_CFG, h_K=2)
    with pytest.raises(ValueError):
        replace(STANDARD_CFG, c=0)


def test_subset_config_exponents():
    assert STANDARD_CFG.effective_v_pow == 8  # ceil(5 * 4/5 * 2)
    assert STANDARD_CFG.z_pow == 2
    assert STANDARD_CFG.mode == "honest"
    t = STANDARD_CFG.test_variant()
    assert t.z_pow == 1 and t.effective_v_pow == 1 and t.mode == "test"


def test_subset_config_g_values():
    # G_0(T) = T^2 - 5, G_1(T) = (T - 5)^2 - 5
    assert STANDARD_CFG.g_value(0, Fraction(3)) == 4
    assert STANDARD_CFG.g_value(1, Fraction(3)) == -1
    assert STANDARD_CFG.g_value(2, Fraction(10)) == -5


@pytest.fixture(scope="module")
def test_witness(ctx, wspec, budget, cache):
    cfg = STANDARD_CFG.test_variant()
    wit = subset_construct(
        1, cfg, ctx, wspec, SubsetBudget(max_index=2000, factor=budget), cache
    )
    return cfg, wit


def test_subset_construct_test_mode(test_witness):
    cfg, wit = test_witness
    assert wit.mode == "test"
    assert wit.j == 1 and wit.x == 1
    assert wit.k == 150 and wit.z == 150
    assert wit.v == -56422400
    assert wit.z == wit.j * wit.k


def test_subset_check_accepts_valid_witness(test_witness, ctx, wspec, budget, cache):
    cfg, wit = test_witness
    audit = subset_check(wit, cfg, ctx, wspec, budget, cache)
    assert audit.all_equations_pass, audit.failure
    assert audit.failure is None
    assert audit.mode == "test"
    # test mode cannot certify the size separation; the audit says so honestly
    assert not audit.integrality_certified


TAMPERS = [
    ("z", 1, "model-product"),
    ("A", 2, "sequence-coordinates"),
    ("A1", 2, "power-form"),
    ("X1", 1, "bezout-coprimality"),
    ("v", 1, "system-product"),
    ("w", 3, "approximation-power"),
]


@pytest.mark.parametrize("field,delta,expected", TAMPERS)
def test_subset_check_names_tampered_equation(
    test_witness, ctx, wspec, budget, cache, field, delta, expected
):
    cfg, wit = test_witness
    bad = replace(wit, **{field: getattr(wit, field) + delta})
    audit = subset_check(bad, cfg, ctx, wspec, budget, cache)
    assert not audit.all_equations_pass
    assert audit.failure == expected


def test_subset_tampered_T_breaks_denominator_shape(
    test_witness, ctx, wspec, budget, cache
):
    cfg, wit = test_witness
    bad = replace(wit, T=wit.T * 2)
    audit = subset_check(bad, cfg, ctx, wspec, budget, cache)
    assert audit.failure == "denominator-shape"


def test_subset_honest_mode_exhausts_budget(ctx, wspec, budget, cache):
    with pytest.raises(BudgetExhaustedError) as exc:
        subset_construct(
            1, STANDARD_CFG, ctx, wspec, SubsetBudget(max_index=2000, factor=budget), cache
        )
    details = exc.value.details
    assert details["mode"] == "honest"
    assert details["k_required"] == 70583390505343924031066894531250
    assert details["index_required"] > 10**25
    assert details["needed_apparitions"]


def test_estimate_bound_constant(ctx, wspec, budget, cache):
    c = estimate_bound_constant(ctx, STANDARD_CFG, wspec, j_max=3, budget=budget, cache=cache)
    assert isinstance(c, Fraction)
    assert 0 < c <= 2
    # the shipped default covers the measured value
    assert STANDARD_CFG.c >= c


def test_audit_inequalities_certifying_case():
    audit = audit_inequalities(
        y_abs=10, c=Fraction(1), j=3, x=Fraction(3), e0=10**12, kappa=Fraction(2)
    )
    assert all(r["holds"] for r in audit.rows)
    assert [r["name"] for r in audit.rows] == [
        "index-bound",
        "poly-upper",
        "denominator-lower",
    ]
    assert audit.separation
    assert audit.forced_zero  # x = j makes the polynomial value vanish
    assert audit.certified


def test_audit_inequalities_index_too_large():
    audit = audit_inequalities(
        y_abs=10, c=Fraction(1), j=100, x=Fraction(100), e0=10**12, kappa=Fraction(2)
    )
    rows = {r["name"]: r["holds"] for r in audit.rows}
    assert not rows["index-bound"]  # 100^2 = 10000 is not below 2 * 10^2
    assert not audit.certified


def test_audit_inequalities_weak_denominator():
    audit = audit_inequalities(
        y_abs=10, c=Fraction(1), j=3, x=Fraction(5), e0=10, kappa=Fraction(2)
    )
    rows = {r["name"]: r["holds"] for r in audit.rows}
    assert rows["index-bound"]
    assert rows["poly-upper"]  # H^2 = 65536 is under (2*4*10^7)^2
    assert not rows["denominator-lower"]  # 10^2 is far below the needed bound
    assert not audit.forced_zero  # H = -16 and x != j: nothing forces zero
    assert not audit.certified
