"""A one-universal-quantifier formula defining multiplication from
addition and divisibility, plus an exhaustive window validator.

The construction rests on the identity lcm(x, x+1) = x^2 + x: squaring
is recovered from the least common multiple of consecutive integers,
and multiplication from squaring by polarization,

    (m + n)^2 = m^2 + n^2 + 2*l  <=>  l = m*n.

"L is the lcm of x and x+1" needs one universal quantifier:

    x | L  and  x+1 | L  and  forall d [ (x|d and x+1|d) -> L|d ]

which pins L to +/- lcm(x, x+1).  The wrong-sign impostor, which stands
for s = -x^2 - 2x instead of s = x^2 after the shift s = L - x, is
eliminated by three divisibility pins that the true square satisfies as
polynomial identities:

    (x - 1) | (s - x)      since x^2 - x   = x(x - 1)
    (x + 2) | (s - 4)      since x^2 - 4   = (x - 2)(x + 2)
    (x - 2) | (s - 4)

For the impostor these force (x-1) | 4, (x+2) | 4 and (x-2) | 12, whose
only simultaneous solutions are x in {0, -1, 2}; at 0 and -1 the
impostor coincides with x^2 anyway, and at x = 2 the pin (x-2) | (s-4)
degenerates to 0 | (s-4), an equality that the impostor s = -8 fails.
The same degeneration at x = 1 and x = -2 is what makes the pins exact
there (0 | t holds only for t = 0).  All three quantifier blocks share
a single universal variable, so the prenex profile is six existentials
followed by one universal.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from itertools import product

from ..errors import FormulaError
from .evaluate import (
    CLAIM,
    FALSE,
    TRUE,
    IntDomain,
    compile_exact_plan,
    eval_bounded,
)
from .formulas import (
    Add,
    And,
    Divides,
    Eq,
    Exists,
    Forall,
    Or,
    Not,
    Sub,
    Var,
    num,
)

MULT_FREE_ORDER = ("l", "m", "n")


def _pins(x, s) -> list:
    return [
        Divides(Sub(x, num(1)), Sub(s, x)),
        Divides(Add(x, num(2)), Sub(s, num(4))),
        Divides(Sub(x, num(2)), Sub(s, num(4))),
    ]


def _lcm_clause(x, L, d: str):
    return Or(
        (
            Not(And((Divides(x, Var(d)), Divides(Add(x, num(1)), Var(d))))),
            Divides(L, Var(d)),
        )
    )


def mult_formula(drop_pin: int | None = None):
    """The formula M(l, m, n) true over the integers exactly when
    l = m * n, with quantifier profile EEEEEEA (six existentials, one
    universal).

    drop_pin, for negative testing only, removes one of the three
    square-forcing divisibility pins (0, 1, or 2) from every block,
    which re-admits wrong-sign witnesses at scattered inputs.
    """
    if drop_pin is not None and drop_pin not in (0, 1, 2):
        raise ValueError("drop_pin must be 0, 1, or 2")
    l, m, n = Var("l"), Var("m"), Var("n")
    blocks = (
        (m, Var("s1"), Var("L1")),
        (n, Var("s2"), Var("L2")),
        (Add(m, n), Var("s3"), Var("L3")),
    )
    conjuncts = []
    for x, s, L in blocks:
        conjuncts.append(Divides(x, L))
        conjuncts.append(Divides(Add(x, num(1)), L))
        conjuncts.append(Eq(Add(s, x), L))
        pins = _pins(x, s)
        if drop_pin is not None:
            pins = [p for i, p in enumerate(pins) if i != drop_pin]
        conjuncts.extend(pins)
    conjuncts.append(
        Eq(Var("s3"), Add(Add(Var("s1"), Var("s2")), Add(l, l)))
    )
    conjuncts.append(
        Forall(
            ("d",),
            And(tuple(_lcm_clause(x, L, "d") for x, _, L in blocks)),
        )
    )
    return Exists(
        ("L1", "L2", "L3", "s1", "s2", "s3"),
        And(tuple(conjuncts)),
    )


def mult_oracle(l: int, m: int, n: int) -> bool:
    return l == m * n


# ---------------------------------------------------------------------------
# validation


@dataclass
class ValidationReport:
    total: int
    mismatches: list = field(default_factory=list)
    elapsed_seconds: float = 0.0
    compiled: bool = False

    @property
    def agree(self) -> bool:
        return not self.mismatches

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "mismatch_count": len(self.mismatches),
            "mismatches": [
                {"env": dict(zip(MULT_FREE_ORDER, env)) if len(env) == 3 else list(env),
                 "formula": fv, "oracle": ov}
                for env, fv, ov in self.mismatches[:25]
            ],
            "agree": self.agree,
            "elapsed_seconds": round(self.elapsed_seconds, 3),
            "compiled": self.compiled,
        }


def validate_defining_formula(
    formula,
    free_order: tuple,
    oracle,
    bound: int,
    max_mismatches: int = 1000,
) -> ValidationReport:
    """Exhaustively compare the formula against the oracle over all
    assignments of the free variables with absolute value <= bound.

    When the formula compiles to an exact plan the sweep runs through a
    generated specialized function; otherwise each assignment goes
    through the bounded evaluator, where an "unknown" verdict counts as
    a mismatch (a defining formula must be decidable on integers).
    """
    start = time.perf_counter()
    window = range(-bound, bound + 1)
    plan = compile_exact_plan(formula)
    report = ValidationReport(total=0, compiled=plan is not None)

    if plan is not None:
        fn = plan.compile_callable(tuple(free_order))
        for combo in product(window, repeat=len(free_order)):
            report.total += 1
            got = fn(*combo)
            want = bool(oracle(*combo))
            if got != want:
                report.mismatches.append(
                    (combo, TRUE if got else FALSE, TRUE if want else FALSE)
                )
                if len(report.mismatches) >= max_mismatches:
                    break
    else:
        dom = IntDomain(max(bound, 2))
        for combo in product(window, repeat=len(free_order)):
            report.total += 1
            env = dict(zip(free_order, combo))
            got = eval_bounded(formula, env, dom, mode=CLAIM)
            want = TRUE if oracle(*combo) else FALSE
            if got != want:
                report.mismatches.append((combo, got, want))
                if len(report.mismatches) >= max_mismatches:
                    break

    report.elapsed_seconds = time.perf_counter() - start
    return report


def eval_mult(l: int, m: int, n: int, formula=None) -> str:
    """Evaluate the multiplication formula at one integer triple."""
    f = mult_formula() if formula is None else formula
    for v in (l, m, n):
        if not isinstance(v, int):
            raise FormulaError("the multiplication formula takes integers")
    return eval_bounded(f, dict(zip(MULT_FREE_ORDER, (l, m, n))), IntDomain(4))
