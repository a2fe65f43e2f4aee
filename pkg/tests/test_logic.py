"""Formula parsing, bounded evaluation, the defining formula, packing, descent."""

import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from deflab.arith import QuadElem
from deflab.curve import Curve
from deflab.errors import (
    BudgetExhaustedError,
    FormulaError,
    FormulaParseError,
    FormulaSortError,
    PreconditionError,
    ShapeError,
    TooManyUniversalsError,
)
from deflab.logic import (
    CLAIM,
    FINITE,
    IntDomain,
    MULT_FREE_ORDER,
    QuadDomain,
    bounded_agreement,
    compile_exact_plan,
    eval_bounded,
    four_squares,
    free_vars,
    mult_formula,
    mult_oracle,
    parse,
    print_formula,
    profile,
    rankonedown_check,
    reduce_quantifiers,
    residue_reps,
    subfield_check,
    validate_defining_formula,
    weierstrass_quantifier_rewrite,
)
from deflab.logic.formulas import (
    Add,
    And,
    Const,
    Divides,
    Eq,
    Exists,
    Forall,
    Mul,
    Not,
    NotEq,
    Or,
    Scale,
    Sub,
    Var,
)


# ---------------------------------------------------------------------------
# parsing and printing


def test_parse_print_fixed_samples():
    for text in [
        "(= x 1)",
        "(A (x) (E (y) (= (+ x 1) y)))",
        "(E (u v) (and (div u v) (!= u v) (or (= u 0) (= v 0))))",
        "(not (= (- x y) (* 3 z)))",
    ]:
        f = parse(text)
        assert parse(print_formula(f)) == f


def test_parse_print_ring_sort():
    for text in [
        "(E (u v) (= (** u v) (* 3 w)))",
        "(nonsquare (+ x x))",
        "(pred inring (+ x 1))",
    ]:
        f = parse(text, sort="ring")
        assert parse(print_formula(f), sort="ring") == f


def test_numerals_expand_to_scaled_one():
    f = parse("(= x 5)")
    assert f == Eq(Var("x"), Scale(5, Const(1)))


def test_parse_errors():
    with pytest.raises(FormulaParseError):
        parse("(= x")
    with pytest.raises(FormulaParseError):
        parse("(= x 1) junk")
    with pytest.raises(FormulaParseError):
        parse("(?? x 1)")
    with pytest.raises(FormulaParseError):
        parse("(* x y)")  # scaling needs a literal integer


def test_sort_checking():
    with pytest.raises(FormulaSortError):
        parse("(= (** x y) z)")  # full products are ring-only
    with pytest.raises(FormulaSortError):
        parse("(nonsquare x)")
    parse("(= (** x y) z)", sort="ring")  # fine there


def test_const_restriction():
    with pytest.raises(ValueError):
        Const(5)


def test_shadowed_binders_renamed_apart():
    f = parse("(E (x) (A (x) (= x x)))")
    assert print_formula(f) == "(E (x) (A (x__1) (= x__1 x__1)))"
    # sibling binders have disjoint scopes and may keep their names
    g = parse("(and (E (x) (= x 1)) (E (x) (= x 0)))")
    assert print_formula(g) == "(and (E (x) (= x 1)) (E (x) (= x 0)))"


def _terms(names, depth):
    leaf = st.one_of(
        st.sampled_from([Var(n) for n in names]),
        st.sampled_from([Const(0), Const(1)]),
    )
    if depth == 0:
        return leaf
    sub = _terms(names, depth - 1)
    return st.one_of(
        leaf,
        st.builds(Add, sub, sub),
        st.builds(Sub, sub, sub),
        st.builds(Scale, st.integers(min_value=-9, max_value=9), sub),
    )


def _atoms(names):
    t = _terms(names, 2)
    return st.one_of(
        st.builds(Eq, t, t),
        st.builds(NotEq, t, t),
        st.builds(Divides, t, t),
    )


@st.composite
def _formulas(draw):
    free = ("x", "y")
    bound = draw(
        st.lists(
            st.sampled_from(("u", "v", "w1", "w2")), unique=True, min_size=0, max_size=3
        )
    )
    names = free + tuple(bound)
    a = _atoms(names)
    body = draw(
        st.one_of(
            a,
            st.builds(lambda p, q: And((p, q)), a, a),
            st.builds(lambda p, q: Or((p, q)), a, a),
            st.builds(Not, a),
        )
    )
    for name in bound:
        quant = draw(st.sampled_from((Exists, Forall)))
        body = quant((name,), body)
    return body


@settings(max_examples=300, deadline=None)
@given(_formulas())
def test_parse_print_roundtrip_random(f):
    assert parse(print_formula(f)) == f


# ---------------------------------------------------------------------------
# profiles and free variables


def test_profile_counts():
    p = profile(parse("(A (x y) (E (z) (A (w) (= x 1))))"))
    assert p.universal_count == 3
    assert p.existential_count == 1
    assert p.alternation_pattern == "∀∀∃∀"
    d = p.to_dict()
    assert d["universal_count"] == 3


def test_profile_counts_negated_quantifiers():
    # not-exists contributes a universal, not an existential
    p = profile(parse("(not (E (x) (= x 1)))"))
    assert p.universal_count == 1 and p.existential_count == 0


def test_free_vars():
    f = parse("(A (x) (E (y) (= (+ x y) (+ z w))))")
    assert free_vars(f) == {"z", "w"}


# ---------------------------------------------------------------------------
# bounded evaluation


def test_eval_three_valued():
    dom = IntDomain(20)
    f = parse("(E (y) (= (* 2 y) x))")
    assert eval_bounded(f, {"x": 6}, dom) == "true"
    assert eval_bounded(f, {"x": 7}, dom) == "false"
    g = parse("(A (y) (div y x))")
    assert eval_bounded(g, {"x": 0}, dom, mode=CLAIM) == "unknown"
    assert eval_bounded(g, {"x": 0}, dom, mode=FINITE) == "true"


def test_eval_finite_vs_claim_on_bounded_truth():
    dom = IntDomain(5)
    f = parse("(A (y) (or (div 2 y) (div 2 (+ y 1))))")
    # true over any window, but not claimable from a window alone
    assert eval_bounded(f, {}, dom, mode=FINITE) == "true"
    assert eval_bounded(f, {}, dom, mode=CLAIM) in ("true", "unknown")


def test_eval_sweep_budget():
    dom = IntDomain(50)
    f = parse("(A (a b c) (E (d) (= (+ (+ a b) c) d)))")
    # a claim politely degrades; a finite sweep refuses to silently truncate
    assert eval_bounded(f, {}, dom, mode=CLAIM, sweep_budget=10) == "unknown"
    with pytest.raises(BudgetExhaustedError):
        eval_bounded(f, {}, dom, mode=FINITE, sweep_budget=10)


def test_eval_missing_free_variable():
    with pytest.raises(FormulaError):
        eval_bounded(parse("(= x 1)"), {}, IntDomain(5))


def test_quad_domain_membership():
    dom = QuadDomain(5, 2)
    f = parse("(E (t) (= (** t t) u))", sort="ring")
    five = QuadElem(5, Fraction(5), Fraction(0))
    root = QuadElem(5, Fraction(0), Fraction(1))
    assert eval_bounded(f, {"u": five}, dom, mode=FINITE) == "true"  # (sqrt5)^2
    assert eval_bounded(f, {"u": root}, dom, mode=FINITE) == "false"


# ---------------------------------------------------------------------------
# the multiplication formula


def test_mult_formula_profile():
    f = mult_formula()
    p = profile(f)
    assert p.universal_count == 1
    assert free_vars(f) == set(MULT_FREE_ORDER)


def test_mult_formula_compiles_to_exact_plan():
    assert compile_exact_plan(mult_formula()) is not None


def test_mult_oracle():
    assert mult_oracle(6, 2, 3)
    assert not mult_oracle(7, 2, 3)
    assert mult_oracle(0, 0, 5) and mult_oracle(-6, -2, 3)


def test_mult_formula_valid_on_small_window(ctx):
    rep = validate_defining_formula(
        mult_formula(), MULT_FREE_ORDER, mult_oracle, bound=12
    )
    assert rep.agree, rep.mismatches[:3]
    assert rep.total == 25**3
    assert rep.compiled


@pytest.mark.parametrize("pin", [0, 1, 2])
def test_mult_formula_pins_are_load_bearing(pin):
    rep = validate_defining_formula(
        mult_formula(drop_pin=pin), MULT_FREE_ORDER, mult_oracle, bound=8
    )
    assert not rep.agree
    assert len(rep.mismatches) > 0


# ---------------------------------------------------------------------------
# quantifier packing


def test_weierstrass_rewrite_profiles():
    pair = weierstrass_quantifier_rewrite(Curve(0, -2))
    assert profile(pair.original).universal_count == 3
    assert profile(pair.rewrite).universal_count == 2
    d = pair.to_dict()
    assert d["original_profile"]["universal_count"] == 3
    assert d["rewrite_profile"]["universal_count"] == 2
    assert "z" in d["square_argument"]


def test_reduce_two_universals():
    f = parse("(E (a) (A (x y) (E (b) (= (+ (+ x y) a) b))))")
    red = reduce_quantifiers(f)
    assert profile(red.formula).universal_count == 1
    assert red.alpha_field == 5
    assert red.basis_denominator == 20
    assert tuple(red.coefficient_vars)  # the two packed originals
    assert red.universal_var
    assert red.residue_reps


def test_reduce_one_and_zero_universals():
    one = reduce_quantifiers(parse("(A (x) (E (y) (= (+ x 1) y)))"))
    assert profile(one.formula).universal_count == 1
    zero = reduce_quantifiers(parse("(E (y) (= y 1))"))
    assert profile(zero.formula).universal_count == 1


def test_reduce_rejects_three_universals():
    with pytest.raises(TooManyUniversalsError):
        reduce_quantifiers(parse("(A (x y z) (= (+ (+ x y) z) 0))"))


def test_reduce_rejects_bad_shape():
    f = parse("(A (x) (E (y) (A (z) (= (+ (+ x y) z) 0))))")
    with pytest.raises(ShapeError):
        reduce_quantifiers(f)


def test_reduce_rejects_reserved_alpha():
    with pytest.raises(ShapeError):
        reduce_quantifiers(parse("(A (x) (= (+ x alpha) 0))"))


def test_reduce_rejects_zero_basis_denominator():
    with pytest.raises(ValueError):
        reduce_quantifiers(parse("(A (x) (= x 0))"), alpha_data=(5, 0))


def test_reduced_formula_agrees_on_window():
    f = parse("(E (a) (A (x y) (E (b) (= (+ (+ x y) a) b))))")
    red = reduce_quantifiers(f)
    assert bounded_agreement(f, red, [{}], bound=1) == []
    g = parse("(A (x) (E (y) (= (+ x y) z)))")
    redg = reduce_quantifiers(g)
    envs = [{"z": v} for v in (-1, 0, 1)]
    assert bounded_agreement(g, redg, envs, bound=1) == []


def test_residue_reps_structure():
    reps = residue_reps(5)
    assert reps and all(isinstance(r, int) for r in reps)


# ---------------------------------------------------------------------------
# vertical membership challenges


@settings(max_examples=150, deadline=None)
@given(st.integers(min_value=0, max_value=100000))
def test_four_squares_identity(n):
    parts = four_squares(n)
    assert len(parts) == 4
    assert sum(k * k for k in parts) == n
    assert list(parts) == sorted(parts, reverse=True)


def test_four_squares_negative():
    with pytest.raises(ValueError):
        four_squares(-1)


def test_rankonedown_accepts_rationals(ctx):
    for u in (0, 1, 4, 17, Fraction(-3, 7)):
        rep = rankonedown_check(u, 5, ctx)
        assert rep.status == "accepted", (u, rep.notes)
        assert rep.kind == "rank-one-descent"
        # zero is trivially a member; everything else is checked per level
        assert len(rep.levels) == (0 if u == 0 else 3)


def test_rankonedown_rejects_irrationals(ctx):
    for D in (2, 3, 5):
        root = QuadElem(D, Fraction(0), Fraction(1))
        rep = rankonedown_check(root, D, ctx)
        assert rep.status == "rejected", (D, rep.notes)
        assert rep.levels  # margin certificates for the failing level


def test_rankonedown_rejects_split_challenge_prime(ctx):
    with pytest.raises(PreconditionError):
        rankonedown_check(4, 5, ctx, q=11)  # 11 splits in Q(sqrt 5)


def test_subfield_check_accepts_squares(ctx):
    rep = subfield_check(9, 5, ctx)
    assert rep.status == "accepted"
    assert rep.kind == "subfield-membership"


def test_subfield_check_rejects_golden_ratio_unit(ctx):
    u = QuadElem(5, Fraction(1, 2), Fraction(1, 2))
    rep = subfield_check(u, 5, ctx)
    assert rep.status == "rejected"
