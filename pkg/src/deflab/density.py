"""Empirical prime-density machinery.

Exact prime counting, the Hasse-style inequality for primitive divisors,
empirical natural densities of prime sets (a fixed finite set, the
split-or-ramified primes of a quadratic field, the degree-one primes of a
cyclic field), and the construction of inverted-prime sets of prescribed
density from no-degree-one-factor rules.

A natural density is never asserted as a limit here.  Every density is an
empirical ratio

    (#members <= X) / (#primes <= X)

over a grid of cutoffs X, together with a trend verdict.  The verdict
"decreasing-trend" means the ratios never increase after the first grid
point and the tail actually decreases (or the set has already run out and
the ratio is exactly zero); anything else - including a flat ratio near 1
- is "inconclusive".
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from sympy import isprime

from .arith import FactorBudget, is_perfect_square, splitting_type
from .cache import FactorCache
from .divmodel import RingRule, RingSpec
from .eds import VTable, build_V
from .kernels import (
    curve_point_count,
    cyclic_degree_one_counts,
    prime_count,
    primes_upto,
    splitting_counts,
)

# Exact sieving is cheap up to here; beyond it the grid validator refuses
# rather than silently switching to an approximation.
SIEVE_LIMIT = 10**8

DECREASING = "decreasing-trend"
INCONCLUSIVE = "inconclusive"


# ---------------------------------------------------------------------------
# exact prime counting and the primitive-divisor inequality


def count_primes(x: int) -> int:
    """Exact pi(x) by sieve; refuses x beyond SIEVE_LIMIT."""
    if x > SIEVE_LIMIT:
        raise ValueError(f"exact prime counting is capped at {SIEVE_LIMIT}")
    if x < 2:
        return 0
    return prime_count(int(x))


def hasse_check(ell: int, j: int, prime: int) -> bool:
    """Whether ell**j < 3 * prime.

    ``prime`` plays the role of a primitive divisor of the denominator at
    index ell**j: a prime whose multiplicative order bound (point count on
    the reduced curve) must accommodate a point of order ell**j, which by
    the Hasse bound forces ell**j < 3 * prime over the rationals.
    """
    if not isprime(ell):
        raise ValueError("ell must be prime")
    if j < 1:
        raise ValueError("j must be a positive integer")
    if not isprime(prime):
        raise ValueError("the primitive divisor must be prime")
    return ell**j < 3 * prime


def hasse_table_check(table: VTable) -> list[dict]:
    """Run hasse_check over every certified entry of a primitive-divisor
    table; returns one row per entry with an ``ok`` flag."""
    rows = []
    for e in table.entries:
        if e.prime is None:
            continue
        rows.append(
            {
                "ell": e.ell,
                "j": e.j,
                "prime": str(e.prime),
                "certified": e.certified,
                "ok": hasse_check(e.ell, e.j, e.prime),
            }
        )
    return rows


def curve_order_bound_check(a: int, b: int, p_max: int = 200) -> dict:
    """Exact check of #E(F_p) <= p + 1 + 2*sqrt(p) for good odd p <= p_max.

    The comparison is done in integers: |#E - p - 1|^2 <= 4p.  Returns the
    list of violations (expected empty) and the number of primes checked.
    """
    disc = -16 * (4 * a**3 + 27 * b**2)
    violations = []
    checked = 0
    for p in primes_upto(p_max):
        p = int(p)
        if p < 3 or disc % p == 0:
            continue
        n = curve_point_count(a, b, p)
        checked += 1
        if (n - p - 1) ** 2 > 4 * p:
            violations.append({"p": p, "count": n})
    return {"checked": checked, "violations": violations, "pass": not violations}


# ---------------------------------------------------------------------------
# density reports


def format_ratio(r: Fraction, places: int = 6) -> str:
    """Exact decimal rendering of a rational, rounded half away from zero."""
    scaled = Fraction(r) * 10**places
    n = (abs(scaled.numerator) + scaled.denominator // 2) // scaled.denominator
    sign = "-" if scaled < 0 else ""
    return f"{sign}{n // 10**places}.{n % 10**places:0{places}d}"


def trend_verdict(ratios) -> str:
    """Trend classification for a sequence of grid ratios.

    "decreasing-trend" requires the ratios to be non-increasing after the
    first grid point with an actual decrease over that tail; a sequence
    ending at exactly zero qualifies outright.  Flat or rising sequences
    are "inconclusive", as is any grid too short to show a tail.
    """
    rs = tuple(ratios)
    if not rs:
        return INCONCLUSIVE
    if rs[-1] == 0:
        return DECREASING
    tail = rs[1:]
    if len(tail) < 2:
        return INCONCLUSIVE
    if any(later > earlier for earlier, later in zip(tail, tail[1:])):
        return INCONCLUSIVE
    return DECREASING if tail[-1] < tail[0] else INCONCLUSIVE


def _validated_grid(x_grid) -> tuple[int, ...]:
    grid = tuple(int(x) for x in x_grid)
    if not grid:
        raise ValueError("empty cutoff grid")
    if any(x < 2 for x in grid):
        raise ValueError("grid cutoffs must be >= 2")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("grid cutoffs must be strictly increasing")
    if grid[-1] > SIEVE_LIMIT:
        raise ValueError(f"grid exceeds the sieve cap {SIEVE_LIMIT}")
    return grid


@dataclass(frozen=True)
class DensityReport:
    """Empirical density of a prime set over a grid of cutoffs.

    ``counts[i]`` is the pair (members <= x_grid[i], eligible primes <=
    x_grid[i]); ``ratios[i]`` is the exact rational quotient of the pair.
    ``fitted_constant`` is the least C with members <= C * sqrt(X) at
    every grid point (reported for sets expected to be square-root
    sparse; None otherwise).
    """

    label: str
    x_grid: tuple[int, ...]
    counts: tuple[tuple[int, int], ...]
    ratios: tuple[Fraction, ...]
    verdict: str
    fitted_constant: float | None = None

    def __post_init__(self):
        if not (len(self.x_grid) == len(self.counts) == len(self.ratios)):
            raise ValueError("grid, counts and ratios must align")
        for (m, t), r in zip(self.counts, self.ratios):
            if t == 0:
                if r != 0:
                    raise ValueError("ratio over an empty prime range must be 0")
            elif r != Fraction(m, t):
                raise ValueError("ratios must equal members/primes exactly")
        for (m0, t0), (m1, t1) in zip(self.counts, self.counts[1:]):
            if m1 < m0 or t1 < t0:
                raise ValueError("counts must be monotone in the cutoff")

    def final_ratio(self) -> Fraction:
        return self.ratios[-1]

    def to_dict(self) -> dict:
        d = {
            "label": self.label,
            "x_grid": list(self.x_grid),
            "counts": [[m, t] for m, t in self.counts],
            "ratios": [format_ratio(r) for r in self.ratios],
            "ratios_exact": [f"{r.numerator}/{r.denominator}" for r in self.ratios],
            "verdict": self.verdict,
        }
        if self.fitted_constant is not None:
            d["fitted_constant"] = round(self.fitted_constant, 6)
        return d

    def to_csv(self) -> str:
        lines = ["X,members,primes,ratio"]
        for x, (m, t), r in zip(self.x_grid, self.counts, self.ratios):
            lines.append(f"{x},{m},{t},{format_ratio(r)}")
        return "\n".join(lines) + "\n"


def _member_primes(v) -> frozenset:
    if isinstance(v, VTable):
        return v.primes()
    return frozenset(int(p) for p in v)


def v_density(v, x_grid, label: str = "denominator-support") -> DensityReport:
    """Empirical density of a fixed prime set against the full prime count.

    ``v`` may be a primitive-divisor table or any iterable of primes.  The
    fitted constant is the least C with members <= C*sqrt(X) on the grid;
    for a square-root-sparse set the final ratio stays below roughly
    C*sqrt(X)*log(X)/X, which the caller can use as a shape check.
    """
    members = _member_primes(v)
    grid = _validated_grid(x_grid)
    counts = []
    ratios = []
    fitted = 0.0
    for x in grid:
        m = sum(1 for p in members if p <= x)
        t = count_primes(x)
        counts.append((m, t))
        ratios.append(Fraction(m, t) if t else Fraction(0))
        fitted = max(fitted, m / math.sqrt(x))
    return DensityReport(
        label=label,
        x_grid=grid,
        counts=tuple(counts),
        ratios=tuple(ratios),
        verdict=trend_verdict(ratios),
        fitted_constant=fitted,
    )


# ---------------------------------------------------------------------------
# splitting densities


def quadratic_split_density(d_prime: int, x: int) -> Fraction:
    """Fraction of primes <= x that split or ramify in Q(sqrt(d_prime)).

    Chebotarev predicts 1/2 in the limit.  ``d_prime`` must not be a
    perfect square (the extension must be a genuine field).
    """
    if d_prime >= 0 and is_perfect_square(d_prime):
        raise ValueError("d_prime must not be a perfect square")
    if x > SIEVE_LIMIT:
        raise ValueError(f"exact prime counting is capped at {SIEVE_LIMIT}")
    split, inert, ramified = splitting_counts(d_prime, x)
    total = split + inert + ramified
    if total == 0:
        raise ValueError("no primes up to the cutoff")
    return Fraction(split + ramified, total)


def split_density_report(d_prime: int, x_grid) -> DensityReport:
    """Grid version of quadratic_split_density (members = split or
    ramified primes)."""
    grid = _validated_grid(x_grid)
    counts = []
    ratios = []
    for x in grid:
        split, inert, ramified = splitting_counts(d_prime, x)
        m, t = split + ramified, split + inert + ramified
        counts.append((m, t))
        ratios.append(Fraction(m, t) if t else Fraction(0))
    return DensityReport(
        label=f"split-or-ramified-sqrt({d_prime})",
        x_grid=grid,
        counts=tuple(counts),
        ratios=tuple(ratios),
        verdict=trend_verdict(ratios),
    )


@dataclass(frozen=True)
class CyclicFieldRule:
    """A degree-p cyclic field inside the q-th cyclotomic field.

    Needs p and q prime with q = 1 (mod p); the field is the fixed field
    of the index-p subgroup of (Z/q)*.  A rational prime r != q has a
    degree-one factor there iff the order of r mod q divides (q-1)/p,
    i.e. iff r^((q-1)/p) = 1 (mod q); the prime q itself is totally
    ramified (with residue degree one) and is tallied separately.
    """

    p: int
    q: int

    def __post_init__(self):
        if not isprime(self.p):
            raise ValueError("the degree p must be prime")
        if not isprime(self.q) or (self.q - 1) % self.p != 0:
            raise ValueError("need q prime with q = 1 (mod p)")

    def has_degree_one_factor(self, r: int) -> bool:
        if r == self.q:
            return True  # totally ramified, residue degree one
        return pow(r, (self.q - 1) // self.p, self.q) == 1

    def to_ring_rule(self) -> RingRule:
        return RingRule(kind="cyclic-no-degree-one", p=self.p, q=self.q)

    def to_dict(self) -> dict:
        return {"p": self.p, "q": self.q}


def smallest_cyclic_rule(p: int) -> CyclicFieldRule:
    """The cyclic rule of degree p with the least auxiliary prime q."""
    if not isprime(p):
        raise ValueError("the degree p must be prime")
    q = p + 1
    while not (isprime(q) and (q - 1) % p == 0):
        q += 1
    return CyclicFieldRule(p=p, q=q)


def cyclic_degree_one_density(rule: CyclicFieldRule, x: int) -> Fraction:
    """Empirical fraction of unramified primes <= x with a degree-one
    factor in the rule's cyclic field.  Chebotarev predicts 1/p; the
    ramified prime q is excluded from both numerator and denominator.
    """
    if x > SIEVE_LIMIT:
        raise ValueError(f"exact prime counting is capped at {SIEVE_LIMIT}")
    deg_one, higher, _ramified = cyclic_degree_one_counts(rule.p, rule.q, x)
    total = deg_one + higher
    if total == 0:
        raise ValueError("no unramified primes up to the cutoff")
    return Fraction(deg_one, total)


def cyclic_density_report(rule: CyclicFieldRule, x_grid) -> DensityReport:
    """Grid version of cyclic_degree_one_density (members = degree-one
    primes; the eligible count excludes the ramified prime q)."""
    grid = _validated_grid(x_grid)
    counts = []
    ratios = []
    for x in grid:
        deg_one, higher, _ = cyclic_degree_one_counts(rule.p, rule.q, x)
        t = deg_one + higher
        counts.append((deg_one, t))
        ratios.append(Fraction(deg_one, t) if t else Fraction(0))
    return DensityReport(
        label=f"degree-one-cyclic(p={rule.p},q={rule.q})",
        x_grid=grid,
        counts=tuple(counts),
        ratios=tuple(ratios),
        verdict=trend_verdict(ratios),
    )


# ---------------------------------------------------------------------------
# lifting a rational density-zero set to a quadratic field
#
# Primes of a quadratic field are ordered by norm: a split rational prime
# p contributes two field primes of norm p, a ramified one contributes one
# of norm p, and an inert one contributes a single prime of norm p^2
# (which enters the count only once p^2 <= X).  A rational set U then
# lifts to at most two field primes per member, so a vanishing rational
# ratio forces a vanishing lifted ratio.


def quadratic_lift_check(u, d: int, x: int) -> dict:
    """Counting identity and bound for lifting a rational prime set U into
    Q(sqrt(d)) with norm ordering.

    Returns the rational and lifted member counts, the total number of
    field primes of norm <= x computed two independent ways (bulk kernel
    counts vs. per-prime classification), and the two checks: the totals
    agree, and lifted_members <= 2 * rational_members.
    """
    if d >= 0 and is_perfect_square(d):
        raise ValueError("d must not be a perfect square")
    members = _member_primes(u)

    # bulk: split/ramified primes have norm p; inert primes have norm p^2
    split_x, _, ram_x = splitting_counts(d, x)
    _, inert_sqrt, _ = splitting_counts(d, math.isqrt(x))
    field_total_bulk = 2 * split_x + ram_x + inert_sqrt

    field_total_direct = 0
    lifted = 0
    rational = 0
    for p in primes_upto(x):
        p = int(p)
        kind = splitting_type(p, d)
        if kind == "split":
            contrib = 2
        elif kind == "ramified":
            contrib = 1
        else:
            contrib = 1 if p * p <= x else 0
        field_total_direct += contrib
        if p in members:
            rational += 1
            lifted += contrib
    rational_total = count_primes(x)
    return {
        "x": x,
        "d": d,
        "rational_members": rational,
        "rational_primes": rational_total,
        "lifted_members": lifted,
        "field_primes": field_total_direct,
        "field_primes_bulk": field_total_bulk,
        "identity_ok": field_total_direct == field_total_bulk,
        "bound_ok": lifted <= 2 * rational,
    }


# ---------------------------------------------------------------------------
# constructing the inverted set W


@dataclass(frozen=True)
class RingConstruction:
    """A rule-built inverted set W with its empirical density evidence.

    ``spec`` is the membership rule (include the finite bad set, exclude
    the denominator-support primes, match the no-degree-one rule);
    ``report`` measures the density of W on a grid; ``conditions`` lists
    the three structural requirements with their checked outcomes.
    """

    spec: RingSpec
    report: DensityReport
    epsilon: Fraction
    target_density: Fraction
    rule_description: str
    conditions: tuple[dict, ...]

    @property
    def ok(self) -> bool:
        return all(c["holds"] for c in self.conditions)

    def to_dict(self) -> dict:
        return {
            "spec": self.spec.to_dict(),
            "report": self.report.to_dict(),
            "epsilon": str(self.epsilon),
            "target_density": str(self.target_density),
            "rule_description": self.rule_description,
            "conditions": list(self.conditions),
            "ok": self.ok,
        }


def _pick_rule(eps: Fraction, d_prime: int):
    """Smallest-degree rule achieving density >= 1 - eps.

    eps = 1 needs no rule at all; eps >= 1/2 is met by the inert primes
    of a quadratic field (density 1/2); below that the no-degree-one
    primes of a cyclic field of prime degree p > 1/eps have density
    1 - 1/p > 1 - eps.
    """
    if eps == 1:
        return None, Fraction(0), "no rule (finite include list only)"
    if eps >= Fraction(1, 2):
        if d_prime >= 0 and is_perfect_square(d_prime):
            raise ValueError("d_prime must not be a perfect square")
        rule = RingRule(kind="quadratic-inert", D=d_prime)
        return rule, Fraction(1, 2), f"inert primes of Q(sqrt({d_prime}))"
    p = 2
    while p <= 1 / eps or not isprime(p):
        p += 1
    cyc = smallest_cyclic_rule(p)
    desc = f"no-degree-one primes of the cyclic field (p={cyc.p}, q={cyc.q})"
    return cyc.to_ring_rule(), 1 - Fraction(1, p), desc


def build_W(
    epsilon,
    ctx=None,
    exclusions=None,
    includes=None,
    *,
    d_prime: int = 5,
    x: int = 100_000,
    x_grid=None,
    budget: FactorBudget | None = None,
    cache: FactorCache | None = None,
) -> RingConstruction:
    """Construct an inverted set W of target density >= 1 - epsilon.

    W consists of the rule primes (no degree-one factor in the auxiliary
    field) plus the finite ``includes`` set (defaults to the curve's bad
    primes), minus the ``exclusions`` (defaults to the primitive-divisor
    primes of the curve context, i.e. the denominator support the
    definability argument must keep un-inverted).  The attached report
    measures the density of W itself on the grid.

    The three checked conditions: every exclusion stays outside W; every
    include lands inside W; and every W member on the grid is either an
    include or a rule match (membership has no other source).  If an
    explicit exclusion collides with an include, the requirements are
    contradictory and the membership rule raises.
    """
    eps = Fraction(epsilon)
    if not 0 < eps <= 1:
        raise ValueError("epsilon must lie in (0, 1]")
    if includes is None:
        includes = frozenset(ctx.bad_primes) if ctx is not None else frozenset()
    else:
        includes = frozenset(int(p) for p in includes)
    if exclusions is None:
        if ctx is not None:
            exclusions = build_V(ctx, budget=budget, cache=cache).primes()
        else:
            exclusions = frozenset()
    else:
        exclusions = _member_primes(exclusions)

    rule, target, description = _pick_rule(eps, d_prime)
    spec = RingSpec(
        include=includes,
        exclude=exclusions,
        rule=rule,
        bad_included=bool(includes),
    )

    grid = _validated_grid(x_grid if x_grid is not None else (x // 100, x // 10, x))
    counts = []
    ratios = []
    membership_clean = True
    for cutoff in grid:
        m = 0
        for r in primes_upto(cutoff):
            r = int(r)
            if spec.contains_prime(r):
                m += 1
                if r not in includes and (rule is None or not rule.contains(r)):
                    membership_clean = False
        t = count_primes(cutoff)
        counts.append((m, t))
        ratios.append(Fraction(m, t) if t else Fraction(0))
    report = DensityReport(
        label="inverted-set",
        x_grid=grid,
        counts=tuple(counts),
        ratios=tuple(ratios),
        verdict=trend_verdict(ratios),
    )

    conditions = (
        {
            "condition": "exclusions-outside",
            "requirement": "no denominator-support prime is inverted",
            "holds": all(not spec.contains_prime(v) for v in exclusions),
        },
        {
            "condition": "bad-primes-inside",
            "requirement": "every bad prime is inverted",
            "holds": all(spec.contains_prime(b) for b in includes),
        },
        {
            "condition": "no-degree-one-factor",
            "requirement": "all W members beyond the finite include list "
            "match the no-degree-one rule",
            "holds": membership_clean,
        },
    )
    return RingConstruction(
        spec=spec,
        report=report,
        epsilon=eps,
        target_density=target,
        rule_description=description,
        conditions=conditions,
    )
