"""Quantifier rewrites: trading curve-point quantification for a
square test, and packing several universal quantifiers over a base ring
into one universal quantifier over a quadratic extension.

The packing transform takes a definition in the shape

    exists U1..Ur  forall x0..xl  exists Y1..Ym  P

over the base ring and produces a definition over the extension with a
single universal variable w.  The universally quantified base variables
reappear existentially, as the coordinates of w in the power basis
{1, alpha}: every w with base-ring coordinates is hit through the first
disjunct (w = x0 + x1*alpha with both coordinates in the base ring, P
required), and every other w escapes through the second disjunct
(D*w = x0 + x1*alpha with some coordinate not divisible by D) — for a
suitable fixed integer D, one of the two always holds and never both.
"by what it does": the coordinate-or-escape dichotomy is what lets one
universal quantifier over the big ring simulate a full tuple of
universal quantifiers over the small one.

Membership of a value in the base ring is expressed through a pluggable
template Gamma with distinguished free variable V (default: the
semantic predicate (pred in-base-ring V)); any other free variables of
the template are treated as auxiliary witnesses, freshened per use and
bound existentially next to the variable they certify.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..arith import factor
from ..errors import ShapeError, TooManyUniversalsError
from .formulas import (
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
    NotSquare,
    Or,
    Pred,
    Scale,
    Sub,
    Var,
    all_var_names,
    conj,
    disj,
    free_vars,
    fresh_name,
    num,
    prenex,
    subst,
)

ALPHA_NAME = "alpha"
DEFAULT_ALPHA_DATA = (5, 20)


# ---------------------------------------------------------------------------
# curve-point quantification vs square test


def _pow(t, k: int):
    out = t
    for _ in range(k - 1):
        out = Mul(out, t)
    return out


def _scaled(k: int, t):
    if k == 0:
        return None
    if k == 1:
        return t
    return Scale(k, t)


def _sum(terms) -> object:
    terms = [t for t in terms if t is not None]
    if not terms:
        return Const(0)
    out = terms[0]
    for t in terms[1:]:
        out = Add(out, t)
    return out


def _oncurve(a: int, b: int, x, y, z):
    """The affine curve equation for (x/z, y/z), denominators cleared
    by z^3:  x^3 + a x z^2 + b z^3 = y^2 z."""
    lhs = _sum(
        [
            _pow(x, 3),
            _scaled(a, Mul(x, Mul(z, z))),
            _scaled(b, _pow(z, 3)),
        ]
    )
    return Eq(lhs, Mul(Mul(y, y), z))


@dataclass(frozen=True)
class WeierstrassPair:
    """A point-quantified sentence shell and its two-universal rewrite."""

    original: object
    rewrite: object
    square_argument: object

    def to_dict(self) -> dict:
        from .formulas import print_formula, print_term, profile

        return {
            "original": print_formula(self.original),
            "original_profile": profile(self.original).to_dict(),
            "rewrite": print_formula(self.rewrite),
            "rewrite_profile": profile(self.rewrite).to_dict(),
            "square_argument": print_term(self.square_argument),
        }


def weierstrass_quantifier_rewrite(curve) -> WeierstrassPair:
    """Quantifying over curve points costs three universal variables
    (x, y, z with (x/z, y/z) on the curve); since the curve equation
    determines y up to sign, the y-quantifier can be traded for a
    semantic non-square test, leaving two.

    The square test's argument is z^6 * ((x/z)^3 + a(x/z) + b)
    = x^3 z^3 + a x z^5 + b z^6: for z != 0 it is a square exactly when
    the affine equation has a y-solution.
    """
    a, b = int(curve.a), int(curve.b)
    x, y, z = Var("x"), Var("y"), Var("z")

    original = Forall(
        ("x", "y", "z"),
        Or(
            (
                Not(And((NotEq(z, Const(0)), _oncurve(a, b, x, y, z)))),
                Exists(("y2",), _oncurve(a, b, x, Var("y2"), z)),
            )
        ),
    )

    square_argument = _sum(
        [
            Mul(_pow(x, 3), _pow(z, 3)),
            _scaled(a, Mul(x, _pow(z, 5))),
            _scaled(b, _pow(z, 6)),
        ]
    )
    rewrite = Forall(
        ("x", "z"),
        Or(
            (
                And(
                    (
                        NotEq(z, Const(0)),
                        Exists(("y",), _oncurve(a, b, x, y, z)),
                    )
                ),
                NotSquare(square_argument),
                Eq(z, Const(0)),
            )
        ),
    )
    return WeierstrassPair(original, rewrite, square_argument)


# ---------------------------------------------------------------------------
# universal-quantifier packing


def default_gamma():
    return Pred("in-base-ring", (Var("V"),))


def _strip_w_part(D: int, spec) -> int:
    """The part of D supported outside the ring's inverted primes: the
    quotient ring modulo D only sees these factors."""
    if spec is None:
        return abs(D)
    out = 1
    for p, e in factor(abs(D)).factors:
        if not spec.contains_prime(p):
            out *= p**e
    return out


def residue_reps(D: int, spec=None) -> tuple:
    """Representatives of every nonzero residue class modulo D in the
    localized base ring: inverted primes collapse, so the classes are
    those of the integers modulo the surviving part of D."""
    if D == 0:
        raise ValueError("the basis denominator must be nonzero")
    effective = _strip_w_part(D, spec)
    return tuple(range(1, effective))


def _instantiate_gamma(gamma, target, taken: set):
    """Substitute the target term for V, freshening the template's
    auxiliary variables; returns (formula, aux_names)."""
    aux = sorted(free_vars(gamma) - {"V"})
    mapping = {"V": target}
    fresh = []
    for name in aux:
        nv = fresh_name(name, taken)
        taken.add(nv)
        fresh.append(nv)
        mapping[name] = Var(nv)
    return subst(gamma, mapping), fresh


@dataclass
class ReducedFormula:
    formula: object
    universal_var: str
    coefficient_vars: tuple
    alpha_field: int
    basis_denominator: int
    residue_reps: tuple

    def to_dict(self) -> dict:
        from .formulas import print_formula, profile

        return {
            "formula": print_formula(self.formula),
            "profile": profile(self.formula).to_dict(),
            "universal_var": self.universal_var,
            "coefficient_vars": list(self.coefficient_vars),
            "alpha_field": self.alpha_field,
            "basis_denominator": self.basis_denominator,
            "residue_reps": list(self.residue_reps),
        }


def reduce_quantifiers(
    f,
    gamma=None,
    alpha_data: tuple = DEFAULT_ALPHA_DATA,
    spec=None,
) -> ReducedFormula:
    """Pack the universal quantifiers of f (at most two, the degree of
    the quadratic extension) into a single universal quantifier over the
    extension.

    f must prenex into the shape  exists*  forall*  exists*  — anything
    else raises a shape error, and more than two universals raises the
    too-many-universals error.  The output formula uses the reserved
    free variable ``alpha`` for the power-basis generator; evaluate it
    with alpha bound to the square root of alpha_data[0].
    """
    D_field, D = alpha_data
    if D == 0:
        raise ValueError("the basis denominator must be nonzero")
    gamma = default_gamma() if gamma is None else gamma
    if "V" not in free_vars(gamma):
        raise ValueError("gamma must have the distinguished free variable V")

    if ALPHA_NAME in all_var_names(f):
        raise ShapeError(
            f"the variable name {ALPHA_NAME!r} is reserved for the "
            "power-basis generator"
        )

    prefix, matrix = prenex(f)
    kinds = "".join(k for k, _ in prefix)
    lead = len(kinds) - len(kinds.lstrip("E"))
    rest = kinds[lead:]
    forall_len = len(rest) - len(rest.lstrip("A"))
    tail = rest[forall_len:]
    if tail.strip("E"):
        raise ShapeError(
            "the formula does not prenex into exists* forall* exists* "
            f"(got pattern {kinds!r})"
        )
    n = 2
    if forall_len > n:
        raise TooManyUniversalsError(
            f"{forall_len} universal variables cannot be packed into a "
            f"degree-{n} extension"
        )

    u_vars = [v for _, v in prefix[:lead]]
    x_vars = [v for _, v in prefix[lead : lead + forall_len]]
    y_vars = [v for _, v in prefix[lead + forall_len :]]

    taken = set(all_var_names(f)) | {ALPHA_NAME, "V"}
    coeff_vars = list(x_vars)
    while len(coeff_vars) < n:
        pad = fresh_name(f"x{len(coeff_vars)}", taken)
        taken.add(pad)
        coeff_vars.append(pad)
    w = fresh_name("w", taken)
    taken.add(w)

    free = sorted(free_vars(f))

    pre_aux: list = []
    post_aux: list = []
    f1 = []
    for t in free:
        g, aux = _instantiate_gamma(gamma, Var(t), taken)
        pre_aux.extend(aux)
        f1.append(g)
    f2 = []
    for v in u_vars:
        g, aux = _instantiate_gamma(gamma, Var(v), taken)
        pre_aux.extend(aux)
        f2.append(g)
    f3 = []
    for v in coeff_vars:
        g, aux = _instantiate_gamma(gamma, Var(v), taken)
        post_aux.extend(aux)
        f3.append(g)
    f4 = []
    for v in y_vars:
        g, aux = _instantiate_gamma(gamma, Var(v), taken)
        post_aux.extend(aux)
        f4.append(g)

    basis_term = Add(Var(coeff_vars[0]), Mul(Var(coeff_vars[1]), Var(ALPHA_NAME)))
    coords_eq = Eq(Var(w), basis_term)
    scaled_eq = Eq(Scale(D, Var(w)), basis_term)

    reps = residue_reps(D, spec)
    if reps:
        h = disj(
            tuple(
                Divides(num(D), Sub(Var(v), num(a)))
                for v in coeff_vars
                for a in reps
            )
        )
    else:
        # D is a unit in the localized ring: no w can escape
        h = Eq(Const(0), Const(1))

    first = conj(tuple(f1 + f2 + f3 + f4 + [coords_eq, matrix]))
    second = conj(tuple([scaled_eq] + f3 + [h]))
    body = Exists(
        tuple(coeff_vars + post_aux + y_vars),
        Or((first, second)),
    )
    out = Forall((w,), body)
    pre = tuple(u_vars + pre_aux)
    if pre:
        out = Exists(pre, out)
    return ReducedFormula(
        formula=out,
        universal_var=w,
        coefficient_vars=tuple(coeff_vars),
        alpha_field=D_field,
        basis_denominator=D,
        residue_reps=reps,
    )


# ---------------------------------------------------------------------------
# bounded agreement


def bounded_agreement(
    f,
    reduced: ReducedFormula,
    envs,
    bound: int = 1,
    spec=None,
    sweep_budget: int = 2_000_000,
) -> list:
    """Compare f (over the base-ring window) against its packed form
    (over the extension window) on the given free-variable assignments,
    reading all quantifiers over the finite windows.  Returns the list
    of disagreements (env, original_verdict, reduced_verdict)."""
    from ..arith import QuadElem
    from .evaluate import FINITE, IntDomain, QuadDomain, eval_bounded

    dom_k = IntDomain(bound)
    dom_m = QuadDomain(reduced.alpha_field, bound, spec)
    alpha = QuadElem(reduced.alpha_field, 0, 1)
    out = []
    for env in envs:
        got_k = eval_bounded(f, env, dom_k, mode=FINITE, sweep_budget=sweep_budget)
        env_m = dict(env)
        env_m[ALPHA_NAME] = alpha
        got_m = eval_bounded(
            reduced.formula, env_m, dom_m, mode=FINITE, sweep_budget=sweep_budget
        )
        if got_k != got_m:
            out.append((dict(env), got_k, got_m))
    return out
