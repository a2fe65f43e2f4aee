"""Bounded evaluation of formulas over integer, rational, and quadratic
domains.

Atoms evaluate exactly.  Quantifiers are the hard part: in the default
``claim`` mode a formula's quantifiers range over the whole (infinite)
domain, so a finite sweep can only ever settle one direction — a found
witness proves an existential, a found counterexample refutes a
universal — and everything else comes back ``unknown`` unless a
registered decision procedure recognizes the subformula's shape and
settles it exactly.  In ``finite`` mode the quantifiers range over the
sweep window itself, which makes evaluation two-valued (used for
agreement testing between a formula and its rewrite).

The decision procedures shipped here cover the shapes this package
actually generates: least-common-multiple forall clauses, existentials
whose witnesses are pinned down to a complete candidate set, equality-
forced existentials, and square-root existentials.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd, isqrt, lcm

from ..arith import QuadElem, is_square_rational
from ..divmodel import in_ring
from ..errors import BudgetExhaustedError, FormulaError
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
    free_vars,
    term_vars,
)

TRUE, FALSE, UNKNOWN = "true", "false", "unknown"

CLAIM, FINITE = "claim", "finite"


def _tri_not(v: str) -> str:
    if v == TRUE:
        return FALSE
    if v == FALSE:
        return TRUE
    return UNKNOWN


# ---------------------------------------------------------------------------
# square testing helpers


def sqrt_frac(x: Fraction) -> Fraction:
    """Exact nonnegative square root of a rational square."""
    x = Fraction(x)
    if x < 0 or not is_square_rational(x):
        raise ValueError(f"{x} is not a rational square")
    return Fraction(isqrt(x.numerator), isqrt(x.denominator))


def is_square_quad(x: QuadElem) -> bool:
    """Is x a square in Q(sqrt(D))?

    For x = a + b*sqrt(D) with b != 0, any root r + s*sqrt(D) satisfies
    r^2 + D s^2 = a and 2rs = b, which forces r^2 to be a root of
    4t^2 - 4at + D b^2, i.e. r^2 = (a ± sqrt(a^2 - D b^2)) / 2.
    """
    if x.is_zero():
        return True
    if x.is_rational():
        if x.a >= 0 and is_square_rational(x.a):
            return True
        ratio = x.a / x.D
        return ratio >= 0 and is_square_rational(ratio)
    disc = x.a * x.a - x.D * x.b * x.b
    if disc < 0 or not is_square_rational(disc):
        return False
    s = sqrt_frac(disc)
    for t in ((x.a + s) / 2, (x.a - s) / 2):
        if t > 0 and is_square_rational(t):
            r = sqrt_frac(t)
            cand = QuadElem(x.D, r, x.b / (2 * r))
            if cand * cand == x:
                return True
    return False


def is_square_value(v) -> bool:
    if isinstance(v, QuadElem):
        return is_square_quad(v)
    v = Fraction(v)
    return v >= 0 and is_square_rational(v)


# ---------------------------------------------------------------------------
# domains


def _is_zero_value(v) -> bool:
    if isinstance(v, QuadElem):
        return v.is_zero()
    return v == 0


def _rat_in_window_ring(x: Fraction, spec) -> bool:
    if spec is None:
        return x.denominator == 1
    return in_ring(x, spec)


class IntDomain:
    """Integers.  The sweep window is 0, 1, -1, ..., bound, -bound."""

    sort = "int"

    def __init__(self, bound: int, preds: dict | None = None):
        if bound < 0:
            raise ValueError("bound must be nonnegative")
        self.bound = bound
        self.preds = dict(preds or {})

    def window(self) -> list:
        out = [0]
        for k in range(1, self.bound + 1):
            out.append(k)
            out.append(-k)
        return out

    def contains(self, v) -> bool:
        if isinstance(v, QuadElem):
            return False
        return Fraction(v).denominator == 1

    def in_window(self, v) -> bool:
        return self.contains(v) and abs(v) <= self.bound

    def divides(self, a, b) -> bool:
        a, b = int(a), int(b)
        if a == 0:
            return b == 0
        return b % a == 0

    def pred(self, name: str, values: tuple) -> bool:
        if name in self.preds:
            return bool(self.preds[name](*values))
        if name == "in-base-ring":
            return all(self.contains(v) for v in values)
        raise FormulaError(f"unknown predicate {name!r} for integer domain")


class RingDomain:
    """Rationals whose denominators stay inside a ring description.

    With spec=None this is just the integers viewed inside Q.  The sweep
    window holds reduced fractions p/q with |p|, q <= bound and q
    admissible, ordered by max(|p|, q).
    """

    sort = "ring"

    def __init__(self, spec=None, bound: int = 10, preds: dict | None = None):
        self.spec = spec
        self.bound = bound
        self.preds = dict(preds or {})

    def window(self) -> list:
        seen = set()
        items = []
        for q in range(1, self.bound + 1):
            if not _rat_in_window_ring(Fraction(1, q), self.spec):
                continue
            for p in range(-self.bound, self.bound + 1):
                if gcd(p, q) != 1:
                    continue
                x = Fraction(p, q)
                if x in seen:
                    continue
                seen.add(x)
                items.append(x)
        items.sort(key=lambda x: (max(abs(x.numerator), x.denominator), x))
        return items

    def contains(self, v) -> bool:
        if isinstance(v, QuadElem):
            return False
        return _rat_in_window_ring(Fraction(v), self.spec)

    def in_window(self, v) -> bool:
        if isinstance(v, QuadElem):
            return False
        x = Fraction(v)
        return (
            abs(x.numerator) <= self.bound
            and x.denominator <= self.bound
            and self.contains(x)
        )

    def divides(self, a, b) -> bool:
        a, b = Fraction(a), Fraction(b)
        if a == 0:
            return b == 0
        return self.contains(b / a)

    def pred(self, name: str, values: tuple) -> bool:
        if name in self.preds:
            return bool(self.preds[name](*values))
        if name == "in-base-ring":
            return all(self.contains(v) for v in values)
        raise FormulaError(f"unknown predicate {name!r} for rational domain")


class QuadDomain:
    """Elements a + b*sqrt(D) of a quadratic field, integer-coordinate
    sweep window, divisibility relative to a ring description.

    Divisibility b/a is tested by integrality over the localized base
    ring: an element with rational trace and norm is integral there
    exactly when both lie in the localization (minimal-polynomial
    criterion), so no prime enumeration in the quadratic field is
    needed.
    """

    sort = "ring"

    def __init__(self, D: int, bound: int = 5, spec=None, preds: dict | None = None):
        self.D = D
        self.bound = bound
        self.spec = spec
        self.preds = dict(preds or {})

    def _to_quad(self, v) -> QuadElem:
        if isinstance(v, QuadElem):
            if v.D != self.D:
                raise FormulaError("element from a different quadratic field")
            return v
        return QuadElem(self.D, Fraction(v), Fraction(0))

    def window(self) -> list:
        coords = sorted(range(-self.bound, self.bound + 1), key=lambda k: (abs(k), k))
        return [
            QuadElem(self.D, a, b)
            for a, b in sorted(
                itertools.product(coords, coords),
                key=lambda ab: (max(abs(ab[0]), abs(ab[1])), ab),
            )
        ]

    def contains(self, v) -> bool:
        try:
            self._to_quad(v)
        except FormulaError:
            return False
        return True

    def in_window(self, v) -> bool:
        if not self.contains(v):
            return False
        q = self._to_quad(v)
        return (
            q.a.denominator == 1
            and q.b.denominator == 1
            and abs(q.a) <= self.bound
            and abs(q.b) <= self.bound
        )

    def _integral(self, e: QuadElem) -> bool:
        if e.is_rational():
            return _rat_in_window_ring(e.a, self.spec)
        return _rat_in_window_ring(e.trace(), self.spec) and _rat_in_window_ring(
            e.norm(), self.spec
        )

    def divides(self, a, b) -> bool:
        qa, qb = self._to_quad(a), self._to_quad(b)
        if qa.is_zero():
            return qb.is_zero()
        return self._integral(qb / qa)

    def pred(self, name: str, values: tuple) -> bool:
        if name in self.preds:
            return bool(self.preds[name](*values))
        if name == "in-base-ring":
            for v in values:
                q = self._to_quad(v)
                if not (q.is_rational() and _rat_in_window_ring(q.a, self.spec)):
                    return False
            return True
        raise FormulaError(f"unknown predicate {name!r} for quadratic domain")


# ---------------------------------------------------------------------------
# term evaluation


def term_value(t, env: dict):
    if isinstance(t, Var):
        try:
            return env[t.name]
        except KeyError:
            raise FormulaError(f"unbound variable {t.name!r}") from None
    if isinstance(t, Const):
        return t.value
    if isinstance(t, Add):
        return term_value(t.left, env) + term_value(t.right, env)
    if isinstance(t, Sub):
        return term_value(t.left, env) - term_value(t.right, env)
    if isinstance(t, Scale):
        return t.k * term_value(t.term, env)
    if isinstance(t, Mul):
        return term_value(t.left, env) * term_value(t.right, env)
    raise TypeError(f"not a term node: {t!r}")


def _linear_in(t, var: str, env: dict):
    """Write t as coeff*var + const with values from env; None if t is
    not linear in var.  Works over any of the value types."""
    if isinstance(t, Var):
        if t.name == var:
            return 1, 0
        return 0, term_value(t, env)
    if isinstance(t, Const):
        return 0, t.value
    if isinstance(t, (Add, Sub)):
        l = _linear_in(t.left, var, env)
        r = _linear_in(t.right, var, env)
        if l is None or r is None:
            return None
        if isinstance(t, Add):
            return l[0] + r[0], l[1] + r[1]
        return l[0] - r[0], l[1] - r[1]
    if isinstance(t, Scale):
        inner = _linear_in(t.term, var, env)
        if inner is None:
            return None
        return t.k * inner[0], t.k * inner[1]
    if isinstance(t, Mul):
        lv = term_vars(t.left)
        rv = term_vars(t.right)
        if var in lv and var in rv:
            return None
        if var in lv:
            factor = term_value(t.right, env)
            inner = _linear_in(t.left, var, env)
        else:
            factor = term_value(t.left, env)
            inner = _linear_in(t.right, var, env)
        if inner is None:
            return None
        return inner[0] * factor, inner[1] * factor
    raise TypeError(f"not a term node: {t!r}")


# ---------------------------------------------------------------------------
# decision procedures


def _conjuncts(f) -> tuple:
    if isinstance(f, And):
        return f.items
    return (f,)


def _match_lcm_clause(clause, dvar: str):
    """Match (or (not (and (div t1 d) (div t2 d))) (div t3 d)) in either
    disjunct order; returns (t1, t2, t3) with d-free terms, else None."""
    if not isinstance(clause, Or) or len(clause.items) != 2:
        return None
    for neg, pos in (clause.items, clause.items[::-1]):
        if not (isinstance(neg, Not) and isinstance(neg.body, And)):
            continue
        if not (isinstance(pos, Divides) and pos.right == Var(dvar)):
            continue
        pair = neg.body.items
        if len(pair) != 2:
            continue
        if not all(
            isinstance(d, Divides) and d.right == Var(dvar) for d in pair
        ):
            continue
        t1, t2, t3 = pair[0].left, pair[1].left, pos.left
        if any(dvar in term_vars(t) for t in (t1, t2, t3)):
            continue
        return t1, t2, t3
    return None


def _lcm_value(a: int, b: int) -> int:
    return lcm(int(a), int(b))


def _int_divides(a: int, b: int) -> bool:
    if a == 0:
        return b == 0
    return b % a == 0


class LcmForall:
    """Decides forall-clauses of the shape

        (A (d) (and (or (not (and (div t1 d) (div t2 d))) (div t3 d)) ...))

    exactly: each clause holds over all integers iff t3 divides
    lcm(t1, t2).  Claim mode, integer domain only — over a finite window
    the common multiples of t1 and t2 can all fall outside the window,
    which changes the truth value, so there the plain sweep is used."""

    def decide(self, f, env, dom, mode, ev):
        if mode != CLAIM or not isinstance(dom, IntDomain):
            return None
        if not isinstance(f, Forall) or len(f.vars) != 1:
            return None
        d = f.vars[0]
        triples = []
        for clause in _conjuncts(f.body):
            m = _match_lcm_clause(clause, d)
            if m is None:
                return None
            triples.append(m)
        for t1, t2, t3 in triples:
            try:
                a = int(term_value(t1, env))
                b = int(term_value(t2, env))
                c = int(term_value(t3, env))
            except (FormulaError, TypeError, ValueError):
                return None
            if not _int_divides(c, _lcm_value(a, b)):
                return FALSE
        return TRUE


class LcmExistsWitness:
    """Decides existential blocks whose witnesses are pinned to complete
    candidate sets by divisibility plus an lcm forall-clause, with the
    rest of the variables forced by linear equalities.  Delegates to the
    exact plan compiler; integer domain only."""

    def __init__(self):
        self._memo: dict = {}

    def decide(self, f, env, dom, mode, ev):
        if not isinstance(dom, IntDomain) or not isinstance(f, Exists):
            return None
        key = id(f)
        if key not in self._memo:
            self._memo[key] = compile_exact_plan(f)
        plan = self._memo[key]
        if plan is None:
            return None
        window = dom.in_window if mode == FINITE else None
        try:
            ok = plan.run(env, window_check=window)
        except (FormulaError, TypeError, ValueError):
            return None
        return TRUE if ok else FALSE


class EqualityForcedExists:
    """Decides (E (y) body) when a conjunct of body is an equality
    linear in y: the witness is forced, so substitute and recurse; no
    solution in the domain means exactly false."""

    def decide(self, f, env, dom, mode, ev):
        if not isinstance(f, Exists) or len(f.vars) != 1:
            return None
        y = f.vars[0]
        for atom in _conjuncts(f.body):
            if not isinstance(atom, Eq):
                continue
            if any(
                name != y and name not in env
                for name in term_vars(atom.left) | term_vars(atom.right)
            ):
                continue
            try:
                lin_l = _linear_in(atom.left, y, env)
                lin_r = _linear_in(atom.right, y, env)
            except FormulaError:
                continue
            if lin_l is None or lin_r is None:
                continue
            coeff = lin_l[0] - lin_r[0]
            rest = lin_l[1] - lin_r[1]
            if isinstance(coeff, QuadElem) or coeff == 0:
                continue
            sol = _solve_scaled(rest, coeff)
            if sol is None or not dom.contains(sol):
                return FALSE
            if mode == FINITE and not dom.in_window(sol):
                return FALSE
            return ev(f.body, {**env, y: sol})
        return None


def _solve_scaled(rest, coeff):
    """The exact solution of coeff*y + rest = 0 (coeff is a nonzero
    rational; rest may be any value type).  Integer inputs keep integer
    type when the division is exact, so domain containment checks see
    the natural representative."""
    if isinstance(rest, int) and isinstance(coeff, int) and rest % coeff == 0:
        return -(rest // coeff)
    return (-rest) / coeff


class SquareRootExists:
    """Decides (E (y) (= (** y y) t)) with t free of y: exactly true when
    the value of t is a square in the domain's field, else exactly
    false.  Witnesses for rational squares stay rational, so this is
    exact for the integer and rational domains; quadratic domains use
    the two-coordinate square test."""

    def decide(self, f, env, dom, mode, ev):
        if not isinstance(f, Exists) or len(f.vars) != 1:
            return None
        y = f.vars[0]
        body = f.body
        if not isinstance(body, Eq):
            return None
        sq, rhs = None, None
        for a, b in ((body.left, body.right), (body.right, body.left)):
            if isinstance(a, Mul) and a.left == Var(y) and a.right == Var(y):
                sq, rhs = a, b
                break
        if sq is None or y in term_vars(rhs):
            return None
        try:
            val = term_value(rhs, env)
        except FormulaError:
            return None
        if isinstance(dom, QuadDomain):
            val = dom._to_quad(val)
        if isinstance(dom, IntDomain):
            v = int(val)
            if v < 0 or isqrt(v) ** 2 != v:
                return FALSE
            root = isqrt(v)
        else:
            if not is_square_value(val):
                return FALSE
            root = None  # found, maybe not materialized
        if mode == FINITE:
            if root is None:
                return None  # fall back to the sweep for window semantics
            if not dom.in_window(root) and not dom.in_window(-root):
                return FALSE
        return TRUE


def default_procedures() -> list:
    return [LcmForall(), LcmExistsWitness(), EqualityForcedExists(), SquareRootExists()]


# ---------------------------------------------------------------------------
# evaluator


DEFAULT_SWEEP_BUDGET = 250_000


def eval_bounded(
    f,
    env: dict | None,
    dom,
    procedures: list | None = None,
    mode: str = CLAIM,
    sweep_budget: int = DEFAULT_SWEEP_BUDGET,
) -> str:
    """Three-valued evaluation: returns "true", "false", or "unknown".

    mode="claim" reads quantifiers over the whole domain (sweeps settle
    only the easy direction; registered procedures settle shapes they
    recognize); mode="finite" reads quantifiers over the sweep window,
    which is fully decidable and never returns "unknown".
    """
    if mode not in (CLAIM, FINITE):
        raise ValueError(f"unknown mode {mode!r}")
    procs = default_procedures() if procedures is None else procedures
    env = dict(env or {})
    window = dom.window()

    def ev(node, scope: dict) -> str:
        if isinstance(node, Eq):
            l, r = term_value(node.left, scope), term_value(node.right, scope)
            return TRUE if _values_equal(l, r) else FALSE
        if isinstance(node, NotEq):
            l, r = term_value(node.left, scope), term_value(node.right, scope)
            return FALSE if _values_equal(l, r) else TRUE
        if isinstance(node, Divides):
            l, r = term_value(node.left, scope), term_value(node.right, scope)
            return TRUE if dom.divides(l, r) else FALSE
        if isinstance(node, NotSquare):
            v = term_value(node.term, scope)
            return FALSE if is_square_value(v) else TRUE
        if isinstance(node, Pred):
            vals = tuple(term_value(a, scope) for a in node.args)
            return TRUE if dom.pred(node.name, vals) else FALSE
        if isinstance(node, Not):
            return _tri_not(ev(node.body, scope))
        if isinstance(node, And):
            saw_unknown = False
            for item in node.items:
                r = ev(item, scope)
                if r == FALSE:
                    return FALSE
                if r == UNKNOWN:
                    saw_unknown = True
            return UNKNOWN if saw_unknown else TRUE
        if isinstance(node, Or):
            saw_unknown = False
            for item in node.items:
                r = ev(item, scope)
                if r == TRUE:
                    return TRUE
                if r == UNKNOWN:
                    saw_unknown = True
            return UNKNOWN if saw_unknown else FALSE
        if isinstance(node, (Exists, Forall)):
            for proc in procs:
                verdict = proc.decide(node, scope, dom, mode, ev)
                if verdict in (TRUE, FALSE):
                    return verdict
            return _sweep(node, scope)
        raise TypeError(f"not a formula node: {node!r}")

    def _sweep(node, scope: dict) -> str:
        nvars = len(node.vars)
        total = len(window) ** nvars
        if total > sweep_budget:
            if mode == FINITE:
                raise BudgetExhaustedError(
                    "finite-mode sweep exceeds the assignment budget",
                    details={
                        "assignments": total,
                        "budget": sweep_budget,
                        "variables": list(node.vars),
                    },
                )
            return UNKNOWN
        is_exists = isinstance(node, Exists)
        saw_unknown = False
        for combo in itertools.product(window, repeat=nvars):
            inner = dict(scope)
            inner.update(zip(node.vars, combo))
            r = ev(node.body, inner)
            if is_exists and r == TRUE:
                return TRUE
            if not is_exists and r == FALSE:
                return FALSE
            if r == UNKNOWN:
                saw_unknown = True
        if mode == FINITE:
            if saw_unknown:
                return UNKNOWN  # cannot happen with exact atoms; defensive
            return FALSE if is_exists else TRUE
        return UNKNOWN

    return ev(f, env)


def _values_equal(l, r) -> bool:
    if isinstance(l, QuadElem) or isinstance(r, QuadElem):
        if not isinstance(l, QuadElem):
            l = QuadElem(r.D, Fraction(l), Fraction(0))
        if not isinstance(r, QuadElem):
            r = QuadElem(l.D, Fraction(r), Fraction(0))
        return l == r
    return l == r


# ---------------------------------------------------------------------------
# exact plan compilation
#
# For existential blocks over the integers whose conjuncts pin every
# bound variable down — divisibility pairs with a matching lcm clause
# give a two-element candidate set, linear equalities force the rest —
# the formula can be compiled once into straight-line steps and then run
# per assignment in microseconds.  This is what makes exhaustive window
# validation of a defining formula feasible.


@dataclass
class PlanStep:
    kind: str  # "candidates" | "force" | "check" | "check-lcm"
    var: str | None
    payload: tuple


@dataclass
class Plan:
    evars: tuple
    steps: list
    source: str = ""
    _fn: object = field(default=None, repr=False)

    def run(self, env: dict, window_check=None) -> bool:
        """Interpret the plan under env; window_check, when given,
        additionally requires every bound value to pass it (finite-mode
        semantics)."""

        def go(i: int, scope: dict) -> bool:
            if i == len(self.steps):
                return True
            step = self.steps[i]
            if step.kind == "candidates":
                t1, t2 = step.payload
                m = _lcm_value(term_value(t1, scope), term_value(t2, scope))
                cands = (m, -m) if m else (0,)
                for c in cands:
                    if window_check is not None and not window_check(c):
                        continue
                    if go(i + 1, {**scope, step.var: c}):
                        return True
                return False
            if step.kind == "force":
                atom = step.payload[0]
                lin_l = _linear_in(atom.left, step.var, scope)
                lin_r = _linear_in(atom.right, step.var, scope)
                coeff = lin_l[0] - lin_r[0]
                rest = lin_l[1] - lin_r[1]
                if rest % coeff != 0:
                    return False
                sol = -(rest // coeff)
                if window_check is not None and not window_check(sol):
                    return False
                return go(i + 1, {**scope, step.var: sol})
            if step.kind == "check":
                atom = step.payload[0]
                l = term_value(atom.left, scope)
                r = term_value(atom.right, scope)
                if isinstance(atom, Eq):
                    ok = l == r
                elif isinstance(atom, NotEq):
                    ok = l != r
                else:
                    ok = _int_divides(int(l), int(r))
                return ok and go(i + 1, scope)
            if step.kind == "check-lcm":
                t1, t2, t3 = step.payload
                m = _lcm_value(term_value(t1, scope), term_value(t2, scope))
                return _int_divides(int(term_value(t3, scope)), m) and go(i + 1, scope)
            raise FormulaError(f"unknown plan step {step.kind!r}")

        return go(0, dict(env))

    def compile_callable(self, free_order: tuple):
        """Generate a specialized python function f(v1, ..., vk) -> bool.
        Claim-mode semantics (no window filtering)."""
        if self._fn is not None and self.source.startswith(
            f"def _plan({', '.join('v_' + v for v in free_order)})"
        ):
            return self._fn
        lines = [f"def _plan({', '.join('v_' + v for v in free_order)}):"]
        indent = 1
        tmp = itertools.count()

        def emit(s: str):
            lines.append("    " * indent + s)

        for step in self.steps:
            if step.kind == "candidates":
                t1, t2 = step.payload
                m = f"_m{next(tmp)}"
                emit(f"{m} = lcm({_render(t1)}, {_render(t2)})")
                emit(f"for v_{step.var} in (({m}, -{m}) if {m} else (0,)):")
                indent += 1
            elif step.kind == "force":
                atom = step.payload[0]
                coeffs, const = _literal_linear(Sub(atom.left, atom.right))
                c = coeffs.pop(step.var)
                rest = _render_linear(coeffs, const)
                r = f"_r{next(tmp)}"
                emit(f"{r} = {rest}")
                emit(f"if {r} % {c}: continue" if indent > 1 else f"if {r} % {c}: return False")
                emit(f"v_{step.var} = -({r} // {c})")
            elif step.kind == "check":
                atom = step.payload[0]
                if isinstance(atom, Eq):
                    cond = f"{_render(atom.left)} != {_render(atom.right)}"
                elif isinstance(atom, NotEq):
                    cond = f"{_render(atom.left)} == {_render(atom.right)}"
                else:
                    a, b = _render(atom.left), _render(atom.right)
                    cond = f"(({b}) % ({a}) != 0 if ({a}) else ({b}) != 0)"
                emit(f"if {cond}: continue" if indent > 1 else f"if {cond}: return False")
            elif step.kind == "check-lcm":
                t1, t2, t3 = step.payload
                m = f"_m{next(tmp)}"
                emit(f"{m} = lcm({_render(t1)}, {_render(t2)})")
                c3 = _render(t3)
                cond = f"({m} % ({c3}) != 0 if ({c3}) else {m} != 0)"
                emit(f"if {cond}: continue" if indent > 1 else f"if {cond}: return False")
            else:
                raise FormulaError(f"unknown plan step {step.kind!r}")
        emit("return True")
        indent = 1
        lines.append("    return False")
        self.source = "\n".join(lines)
        ns = {"lcm": lcm}
        exec(self.source, ns)  # noqa: S102 - source assembled from our own AST
        self._fn = ns["_plan"]
        return self._fn


def _literal_linear(t):
    """Integer-sort linear normal form: ({var: int_coeff}, int_const).
    Raises FormulaError on a product."""
    if isinstance(t, Var):
        return {t.name: 1}, 0
    if isinstance(t, Const):
        return {}, t.value
    if isinstance(t, (Add, Sub)):
        lc, lk = _literal_linear(t.left)
        rc, rk = _literal_linear(t.right)
        sign = 1 if isinstance(t, Add) else -1
        out = dict(lc)
        for v, c in rc.items():
            out[v] = out.get(v, 0) + sign * c
        return {v: c for v, c in out.items() if c}, lk + sign * rk
    if isinstance(t, Scale):
        c, k = _literal_linear(t.term)
        return {v: t.k * x for v, x in c.items() if t.k * x}, t.k * k
    raise FormulaError("nonlinear term in an integer-sort plan")


def _render(t) -> str:
    coeffs, const = _literal_linear(t)
    return _render_linear(coeffs, const)


def _render_linear(coeffs: dict, const: int) -> str:
    parts = []
    for v in sorted(coeffs):
        c = coeffs[v]
        if c == 1:
            parts.append(f"v_{v}")
        elif c == -1:
            parts.append(f"-v_{v}")
        else:
            parts.append(f"{c}*v_{v}")
    if const or not parts:
        parts.append(str(const))
    return "(" + " + ".join(parts).replace("+ -", "- ") + ")"


def compile_exact_plan(f) -> Plan | None:
    """Try to compile (E (vars) (and ...)) into an exact plan: every
    bound variable must be either candidate-pinned (two divisibility
    conjuncts plus a matching lcm forall-clause) or forced by a linear
    equality in already-known variables.  Returns None when the shape
    does not guarantee completeness."""
    if not isinstance(f, Exists):
        return None
    evars = list(f.vars)
    conjuncts = list(_conjuncts(f.body))

    lcm_triples = []  # (t1, t2, t3, consumed_flag_index)
    atoms = []
    for item in conjuncts:
        if isinstance(item, Forall):
            if len(item.vars) != 1:
                return None
            d = item.vars[0]
            for clause in _conjuncts(item.body):
                m = _match_lcm_clause(clause, d)
                if m is None:
                    return None
                lcm_triples.append(list(m) + [False])
        elif isinstance(item, (Eq, Divides, NotEq)):
            atoms.append(item)
        else:
            return None

    known = set()
    for item in conjuncts:
        for name in free_vars(item):
            if name not in evars:
                known.add(name)

    steps: list = []
    remaining = list(evars)
    used_atoms: set = set()
    progress = True
    while remaining and progress:
        progress = False
        for v in list(remaining):
            # candidate pinning
            divs = [
                (i, a)
                for i, a in enumerate(atoms)
                if i not in used_atoms
                and isinstance(a, Divides)
                and a.right == Var(v)
                and term_vars(a.left) <= known
            ]
            pinned = False
            for (i1, a1), (i2, a2) in itertools.combinations(divs, 2):
                for trip in lcm_triples:
                    if trip[3]:
                        continue
                    if {trip[0], trip[1]} == {a1.left, a2.left} and trip[2] == Var(v):
                        steps.append(PlanStep("candidates", v, (a1.left, a2.left)))
                        used_atoms.update((i1, i2))
                        trip[3] = True
                        pinned = True
                        break
                if pinned:
                    break
            if pinned:
                known.add(v)
                remaining.remove(v)
                progress = True
                continue
            # linear forcing
            for i, a in enumerate(atoms):
                if i in used_atoms or not isinstance(a, Eq):
                    continue
                names = term_vars(a.left) | term_vars(a.right)
                if v not in names or not (names - {v}) <= known:
                    continue
                try:
                    coeffs, _ = _literal_linear(Sub(a.left, a.right))
                except FormulaError:
                    continue
                if coeffs.get(v) in (None, 0):
                    continue
                steps.append(PlanStep("force", v, (a,)))
                used_atoms.add(i)
                known.add(v)
                remaining.remove(v)
                progress = True
                break
    if remaining:
        return None

    for i, a in enumerate(atoms):
        if i in used_atoms:
            continue
        if not term_vars(a.left) | term_vars(a.right) <= known:
            return None
        steps.append(PlanStep("check", None, (a,)))
    for trip in lcm_triples:
        if trip[3]:
            continue
        for t in trip[:3]:
            if not term_vars(t) <= known:
                return None
        steps.append(PlanStep("check-lcm", None, (trip[0], trip[1], trip[2])))
    return Plan(tuple(evars), steps)
