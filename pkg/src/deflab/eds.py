"""Elliptic divisibility sequences of denominator ideals.

For a curve context with working point P, the sequence records the
denominator of x(nP) split into its bad-prime part and its good part
d_n, together with the prime support S_n of d_n.  The verification
routines check the laws the divisibility model is built on: square
denominators, strong divisibility, order change under multiplication,
apparition subgroups, growth of log d_n, and the appearance of new
primes (primitive divisors) at prime-power indices.

Several checks are certified by gcd manipulations that never factor the
huge d_n values; factorizations (with budgets and the persistent cache)
are only needed where the support itself must be enumerated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .arith import (
    DEFAULT_BUDGET,
    FactorBudget,
    Factorization,
    is_perfect_square,
    strip_primes,
    strip_support_of,
    support_subset,
    vp,
)
from .cache import FactorCache, cached_factor
from .curve import CurveContext, order_mod_p
from .errors import IncompleteFactorizationError, InfinityError, PreconditionError

# ---------------------------------------------------------------------------
# records


@dataclass(frozen=True)
class EdsRecord:
    """Denominator data of x(nP).

    ``bad_part`` maps bad primes to signed exponents in x_n: positive k
    means p^k divides the denominator, negative k means p^(-k) divides
    the numerator.  ``d_valuations`` maps the resolved good primes of the
    denominator to their (even) exponents.  ``d_n`` is the full good part
    of the denominator; ``cofactor`` is its unresolved portion (1 when
    ``complete``).
    """

    n: int
    x_n: Fraction
    d_n: int
    d_valuations: tuple[tuple[int, int], ...]
    bad_part: tuple[tuple[int, int], ...]
    cofactor: int = 1
    complete: bool = True

    def __post_init__(self):
        prod = self.cofactor
        for p, e in self.d_valuations:
            prod *= p**e
        if prod != self.d_n:
            raise ValueError("good-part valuations do not multiply back to d_n")

    @property
    def support(self) -> frozenset[int]:
        """Resolved primes of d_n (all of S_n when complete)."""
        return frozenset(p for p, _ in self.d_valuations)

    def valuation(self, p: int) -> int:
        for q, e in self.d_valuations:
            if q == p:
                return e
        return 0

    def bad_exponent(self, p: int) -> int:
        for q, e in self.bad_part:
            if q == p:
                return e
        return 0

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "x_n": str(self.x_n),
            "d_n": str(self.d_n),
            "d_valuations": [[p, e] for p, e in self.d_valuations],
            "bad_part": [[p, e] for p, e in self.bad_part],
            "cofactor": str(self.cofactor),
            "complete": self.complete,
        }


def denominator(ctx: CurveContext, n: int) -> int:
    """Good part d_n of the denominator of x(nP); factorization-free."""
    if n < 1:
        raise ValueError("sequence indices start at 1")
    pt = ctx.point(n)
    if pt.is_infinity:
        raise InfinityError(f"{n}P is the point at infinity")
    return strip_primes(pt.x.denominator, ctx.bad_primes)


def eds_record(
    ctx: CurveContext,
    n: int,
    budget: FactorBudget | None = None,
    cache: FactorCache | None = None,
) -> EdsRecord:
    """Build the sequence record at index n, factoring d_n under budget."""
    if n < 1:
        raise ValueError("sequence indices start at 1")
    pt = ctx.point(n)
    if pt.is_infinity:
        raise InfinityError(f"{n}P is the point at infinity")
    x = pt.x
    bad = []
    for p in sorted(ctx.bad_primes):
        e_den = vp(x.denominator, p) if x.denominator % p == 0 else 0
        e_num = vp(x.numerator, p) if x.numerator != 0 and x.numerator % p == 0 else 0
        if e_den:
            bad.append((p, e_den))
        elif e_num:
            bad.append((p, -e_num))
    d_n = strip_primes(x.denominator, ctx.bad_primes)
    fac = cached_factor(d_n, budget or DEFAULT_BUDGET, cache)
    return EdsRecord(
        n=n,
        x_n=x,
        d_n=d_n,
        d_valuations=fac.factors,
        bad_part=tuple(bad),
        cofactor=fac.cofactor,
        complete=fac.complete,
    )


def sn_set(
    ctx: CurveContext,
    n: int,
    budget: FactorBudget | None = None,
    cache: FactorCache | None = None,
) -> tuple[frozenset[int], bool]:
    """(resolved primes of S_n, whether that is all of S_n)."""
    rec = eds_record(ctx, n, budget, cache)
    return rec.support, rec.complete


# ---------------------------------------------------------------------------
# reports


@dataclass
class CheckReport:
    """Outcome of one verification routine.

    ``passed`` is the verdict over everything that could be decided;
    ``complete`` is False when effort budgets left part of the claim
    unchecked (the verdict then covers the resolved part only).
    """

    name: str
    passed: bool
    complete: bool = True
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "check": self.name,
            "passed": self.passed,
            "complete": self.complete,
            "details": self.details,
        }


def verify_square_denominators(ctx: CurveContext, n_max: int) -> CheckReport:
    """den(x_n) and its good part are perfect squares for 1 <= n <= n_max."""
    violations = []
    for n in range(1, n_max + 1):
        pt = ctx.point(n)
        if pt.is_infinity:
            violations.append({"n": n, "reason": "infinity"})
            continue
        den = pt.x.denominator
        good = strip_primes(den, ctx.bad_primes)
        if not is_perfect_square(den):
            violations.append({"n": n, "reason": "denominator not a square"})
        elif not is_perfect_square(good):
            violations.append({"n": n, "reason": "good part not a square"})
    return CheckReport(
        name="square-denominators",
        passed=not violations,
        details={"n_max": n_max, "violations": violations},
    )


def verify_strong_divisibility(ctx: CurveContext, bound: int) -> CheckReport:
    """gcd(d_m, d_n) == d_gcd(m,n) for all 1 <= m <= n <= bound.

    Exact including multiplicities, via integer gcd; no factoring.
    """
    violations = []
    ds = {n: denominator(ctx, n) for n in range(1, bound + 1)}
    for m in range(1, bound + 1):
        for n in range(m, bound + 1):
            g = math.gcd(ds[m], ds[n])
            if g != ds[math.gcd(m, n)]:
                violations.append({"m": m, "n": n})
    return CheckReport(
        name="strong-divisibility",
        passed=not violations,
        details={
            "bound": bound,
            "pairs_checked": bound * (bound + 1) // 2,
            "violations": violations,
        },
    )


def verify_order_change(
    ctx: CurveContext,
    n: int,
    p: int,
    budget: FactorBudget | None = None,
    cache: FactorCache | None = None,
    allow_partial: bool = False,
) -> CheckReport:
    """Multiplying the index by a prime p changes orders predictably.

    For every good prime q dividing d_n: the order of q in d_(p*n) equals
    its order in d_n, plus 2 exactly when q == p.  Checked over the
    resolved primes of the record at n; with allow_partial=False both
    records must be complete (IncompleteFactorizationError otherwise).
    """
    if not _is_prime(p):
        raise ValueError("the index multiplier must be prime")
    rec_n = eds_record(ctx, n, budget, cache)
    rec_pn = eds_record(ctx, p * n, budget, cache)
    if not allow_partial:
        for rec in (rec_n, rec_pn):
            if not rec.complete:
                raise IncompleteFactorizationError(
                    f"record at index {rec.n} has an unresolved cofactor",
                    value=rec.cofactor,
                    index=rec.n,
                )
    violations = []
    checked = []
    d_pn = rec_pn.d_n
    for q, e in rec_n.d_valuations:
        expected = e + (2 if q == p else 0)
        actual = vp(d_pn, q) if d_pn % q == 0 else 0
        checked.append({"q": q, "ord_n": e, "ord_pn": actual, "expected": expected})
        if actual != expected:
            violations.append({"q": q, "expected": expected, "actual": actual})
    return CheckReport(
        name="order-change",
        passed=not violations,
        complete=rec_n.complete and rec_pn.complete,
        details={
            "n": n,
            "p": p,
            "primes_checked": checked,
            "violations": violations,
        },
    )


def verify_subgroup(ctx: CurveContext, q: int, e: int, n_max: int) -> CheckReport:
    """{n <= n_max : q^e | d_n} consists of the multiples of its least member.

    q must be a good prime; direct valuations, no factoring.
    """
    if q in ctx.bad_primes:
        raise PreconditionError(f"{q} is a bad prime for this context")
    members = []
    for n in range(1, n_max + 1):
        pt = ctx.point(n)
        if pt.is_infinity or pt.x.denominator % q != 0:
            continue
        if vp(pt.x.denominator, q) >= e:
            members.append(n)
    if not members:
        return CheckReport(
            name="apparition-subgroup",
            passed=True,
            details={"q": q, "e": e, "n_max": n_max, "members": [], "generator": None},
        )
    r = members[0]
    expected = list(range(r, n_max + 1, r))
    return CheckReport(
        name="apparition-subgroup",
        passed=members == expected,
        details={"q": q, "e": e, "n_max": n_max, "members": members, "generator": r},
    )


def verify_bigger_support(
    ctx: CurveContext, pairs: list[tuple[int, int]] | None = None, bound: int = 25
) -> CheckReport:
    """S_(l*m) gains a prime outside S_l and S_m, for prime pairs l <= m.

    Certified by gcd-stripping d_(l*m) of the support of d_l * d_m; a
    survivor > 1 proves a new prime without factoring anything.
    """
    if pairs is None:
        primes = [p for p in range(2, bound + 1) if _is_prime(p)]
        pairs = [
            (l, m)
            for i, l in enumerate(primes)
            for m in primes[i:]
            if l * m <= bound
        ]
    results = []
    failures = []
    for l, m in pairs:
        d_lm = denominator(ctx, l * m)
        d_l = denominator(ctx, l)
        d_m = denominator(ctx, m)
        survivor = strip_support_of(d_lm, d_l * d_m)
        results.append({"l": l, "m": m, "new_prime_part_digits": len(str(survivor))})
        if survivor == 1:
            failures.append({"l": l, "m": m})
    return CheckReport(
        name="bigger-support",
        passed=not failures,
        details={"pairs": results, "failures": failures},
    )


def verify_m1(
    ctx: CurveContext,
    m1: int = 1,
    l_max: int = 4,
    k_max: int = 4,
    budget: FactorBudget | None = None,
    cache: FactorCache | None = None,
) -> CheckReport:
    """Ratio congruence behind the vertical checks, on a grid.

    For P' = m1*P and all l <= l_max, 2 <= k <= k_max, every resolved
    good prime q with q^e | d_(l*m1) satisfies
    ord_q(x_(l*m1)/x_(k*l*m1) - k^2) >= e.
    """
    violations = []
    checked = 0
    incomplete = []
    for l in range(1, l_max + 1):
        n = l * m1
        rec = eds_record(ctx, n, budget, cache)
        if not rec.complete:
            incomplete.append(n)
        if rec.d_n == 1:
            continue
        x_l = rec.x_n
        for k in range(2, k_max + 1):
            x_kl = ctx.point(k * n).x
            if x_kl == 0:
                continue
            ratio = x_l / x_kl - k * k
            for q, e in rec.d_valuations:
                v = _vq_frac(ratio, q)
                checked += 1
                if v < e:
                    violations.append({"l": l, "k": k, "q": q, "ord": v, "need": e})
    return CheckReport(
        name="ratio-congruence",
        passed=not violations,
        complete=not incomplete,
        details={"m1": m1, "l_max": l_max, "k_max": k_max, "checked": checked,
                 "incomplete_indices": incomplete, "violations": violations},
    )


def _vq_frac(x: Fraction, q: int) -> int:
    if x == 0:
        return 10**9  # effectively infinite for these comparisons
    return vp(x.numerator, q) - vp(x.denominator, q)


def _is_prime(p: int) -> bool:
    from sympy import isprime

    return bool(isprime(p))


# ---------------------------------------------------------------------------
# primitive divisors and the index constants


@dataclass
class PrimitiveDivisorResult:
    ell: int
    j: int
    prime: int | None
    certified: bool
    new_part_digits: int
    exists: bool

    def to_dict(self) -> dict:
        return {
            "ell": self.ell,
            "j": self.j,
            "prime": None if self.prime is None else str(self.prime),
            "certified": self.certified,
            "new_part_digits": self.new_part_digits,
            "exists": self.exists,
        }


def primitive_divisor(
    ctx: CurveContext,
    ell: int,
    j: int = 1,
    budget: FactorBudget | None = None,
    cache: FactorCache | None = None,
) -> PrimitiveDivisorResult:
    """Largest new prime at index ell^j: max of S_(ell^j) minus S_(ell^(j-1)).

    The new-prime part is isolated by gcd stripping (exact); the budget
    only limits factoring that part.  ``certified`` is False when the
    largest prime might hide in an unresolved cofactor.
    """
    if not _is_prime(ell):
        raise ValueError("ell must be prime")
    if j < 1:
        raise ValueError("j must be >= 1")
    d_hi = denominator(ctx, ell**j)
    d_lo = denominator(ctx, ell ** (j - 1)) if j > 1 else 1
    new_part = strip_support_of(d_hi, d_lo) if d_lo > 1 else d_hi
    if new_part == 1:
        return PrimitiveDivisorResult(ell, j, None, True, 1, False)
    fac = cached_factor(new_part, budget or DEFAULT_BUDGET, cache)
    resolved = [p for p, _ in fac.factors]
    if fac.complete:
        return PrimitiveDivisorResult(
            ell, j, max(resolved), True, len(str(new_part)), True
        )
    best = max(resolved) if resolved else None
    return PrimitiveDivisorResult(ell, j, best, False, len(str(new_part)), True)


@dataclass
class CEstimate:
    C: int
    a_ell: dict[int, int]
    m0: int
    pairs_checked: int
    failures: list

    def to_dict(self) -> dict:
        return {
            "C": self.C,
            "a_ell": {str(k): v for k, v in self.a_ell.items()},
            "m0": self.m0,
            "pairs_checked": self.pairs_checked,
            "failures": self.failures,
        }


def estimate_C(ctx: CurveContext, bound: int = 25) -> CEstimate:
    """Empirical support-growth constant.

    C is the least value such that every checked pair of primes (l, m)
    with max(l, m) > C put a new prime into S_(l*m); the scan covers all
    prime pairs with l*m <= bound.  a_ell maps each prime ell <= C to the
    least a with ell^a > C, and m0 is the product of those ell^a.
    """
    report = verify_bigger_support(ctx, bound=bound)
    failing_max = [max(f["l"], f["m"]) for f in report.details["failures"]]
    C = max(failing_max) if failing_max else 1
    a_ell: dict[int, int] = {}
    m0 = 1
    ell = 2
    while ell <= C:
        if _is_prime(ell):
            a = 1
            while ell**a <= C:
                a += 1
            a_ell[ell] = a
            m0 *= ell**a
        ell += 1
    return CEstimate(
        C=C,
        a_ell=a_ell,
        m0=m0,
        pairs_checked=len(report.details["pairs"]),
        failures=report.details["failures"],
    )


def compute_m0(C: int) -> int:
    """Product of ell^a_ell over primes ell <= C, a_ell least with ell^a > C."""
    m0 = 1
    for ell in range(2, C + 1):
        if _is_prime(ell):
            a = 1
            while ell**a <= C:
                a += 1
            m0 *= ell**a
    return m0


# ---------------------------------------------------------------------------
# growth and kappa


def _ln_big(n: int) -> float:
    """Natural log of a huge positive integer, float-overflow safe."""
    b = n.bit_length()
    if b <= 900:
        return math.log(n)
    top = n >> (b - 64)
    return math.log(top) + (b - 64) * math.log(2)


@dataclass
class GrowthReport:
    rows: list
    spread: float
    first_diff: float
    last_diff: float

    @property
    def ratios(self) -> list[float]:
        return [r["ratio"] for r in self.rows]

    def to_dict(self) -> dict:
        return {
            "rows": self.rows,
            "spread": self.spread,
            "first_diff": self.first_diff,
            "last_diff": self.last_diff,
        }


def growth_rate(ctx: CurveContext, lo: int, hi: int) -> GrowthReport:
    """log(d_n)/n^2 over a window, with spread and end-behavior stats.

    The ratio tends to the canonical height of P; the report carries the
    relative spread over the window and the first/last successive
    differences (a flattening sequence has |last| < |first|).
    """
    if not 1 <= lo < hi:
        raise ValueError("need 1 <= lo < hi")
    rows = []
    for n in range(lo, hi + 1):
        d = denominator(ctx, n)
        ratio = _ln_big(d) / (n * n) if d > 1 else 0.0
        rows.append({"n": n, "digits": len(str(d)), "ratio": ratio})
    ratios = [r["ratio"] for r in rows]
    mean = sum(ratios) / len(ratios)
    spread = (max(ratios) - min(ratios)) / mean if mean else float("inf")
    diffs = [abs(ratios[i + 1] - ratios[i]) for i in range(len(ratios) - 1)]
    return GrowthReport(
        rows=rows,
        spread=spread,
        first_diff=diffs[0] if diffs else 0.0,
        last_diff=diffs[-1] if diffs else 0.0,
    )


def compute_kappa(ctx: CurveContext, n_max: int = 3) -> Fraction:
    """kappa with n^2 < kappa * d_n on the window, doubled for headroom."""
    worst = max(Fraction(n * n, denominator(ctx, n)) for n in range(1, n_max + 1))
    return 2 * worst


# ---------------------------------------------------------------------------
# the set V of primitive divisors


@dataclass
class VTable:
    entries: list[PrimitiveDivisorResult]

    def primes(self) -> frozenset[int]:
        return frozenset(e.prime for e in self.entries if e.prime is not None)

    @property
    def all_certified(self) -> bool:
        return all(e.certified for e in self.entries)

    def to_dict(self) -> dict:
        return {
            "entries": [e.to_dict() for e in self.entries],
            "all_certified": self.all_certified,
        }


def build_V(
    ctx: CurveContext,
    bound: int = 11,
    budget: FactorBudget | None = None,
    cache: FactorCache | None = None,
) -> VTable:
    """Primitive-divisor table over prime powers ell^j <= bound."""
    entries = []
    for ell in range(2, bound + 1):
        if not _is_prime(ell):
            continue
        j = 1
        while ell**j <= bound:
            entries.append(primitive_divisor(ctx, ell, j, budget, cache))
            j += 1
    return VTable(entries=entries)


# ---------------------------------------------------------------------------
# corollary-style divisibility facts (the bridge the model relies on)


def verify_divisibility_bridge(
    ctx: CurveContext,
    bound: int = 12,
    budget: FactorBudget | None = None,
    cache: FactorCache | None = None,
) -> CheckReport:
    """Four facts tying index divisibility to denominator divisibility.

    1. j | k implies d_j | d_k (exact integer divisibility).
    2. the apparition index of each resolved prime q of d_k divides k.
    3. q^e | d_j and q^e | d_k imply q^e | d_gcd(j,k) (via strong
       divisibility of the good parts).
    4. for j | k, any resolved prime of d_k absent from d_j has
       apparition index dividing k but not j.
    """
    violations = []
    orders: dict[int, int] = {}

    def apparition(q: int) -> int:
        if q not in orders:
            orders[q] = order_mod_p(ctx.P, ctx.curve, q)
        return orders[q]

    ds = {n: denominator(ctx, n) for n in range(1, bound + 1)}
    recs = {n: eds_record(ctx, n, budget, cache) for n in range(1, bound + 1)}
    incomplete = [n for n in range(1, bound + 1) if not recs[n].complete]
    for j in range(1, bound + 1):
        for k in range(j, bound + 1):
            if k % j == 0 and ds[k] % ds[j] != 0:
                violations.append({"part": 1, "j": j, "k": k})
            g = math.gcd(ds[j], ds[k])
            if ds[math.gcd(j, k)] != g:
                violations.append({"part": 3, "j": j, "k": k})
    for k in range(1, bound + 1):
        for q, _ in recs[k].d_valuations:
            if k % apparition(q) != 0:
                violations.append({"part": 2, "k": k, "q": q})
    for j in range(1, bound + 1):
        for k in range(j, bound + 1):
            if k % j != 0:
                continue
            for q, _ in recs[k].d_valuations:
                if ds[j] % q == 0:
                    continue
                r = apparition(q)
                if k % r != 0 or j % r == 0:
                    violations.append({"part": 4, "j": j, "k": k, "q": q})
    return CheckReport(
        name="divisibility-bridge",
        passed=not violations,
        complete=not incomplete,
        details={
            "bound": bound,
            "incomplete_indices": incomplete,
            "violations": violations,
        },
    )
