"""Field-membership checkers driven by denominator-depth challenges.

Both checkers pick a rational prime q that does not split in the
quadratic extension M = Q(sqrt(D)) and is good for the curve.  The
x-coordinates of the point multiples then supply q-adically deep
elements: at the apparition index the denominator first picks up q, and
multiplying the index by q drives the valuation down two more steps.
Ratios x_j / x_{kj} of equally deep coordinates converge q-adically to
k^2, so square integers — and through sums of four squares, negation
and ratios, every rational — can be approximated to any prescribed
depth, while an element with a nonzero sqrt(D)-component stays at
bounded distance from every such ratio precisely because q does not
split (a split prime would embed M into the q-adics and ruin the
separation).

`rankonedown_check` plays the challenge with ratios against x_j itself
(divisor index versus multiple index, strict half-depth inequality);
`subfield_check` plays it with ratios of r-multiples against the deeper
coordinate (non-strict inequality).  A claim is "accepted" when every
level up to the requested depth has witnesses — membership certified up
to that depth, as reported — and "rejected" when a bounded exhaustive
scan finds no witness at some level, with the scanned margins attached
as certificates.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import isqrt

from sympy import isprime

from ..arith import SPLIT, QuadElem, primes_above, quad_valuation, splitting_type
from ..curve import CurveContext, order_mod_p
from ..errors import PreconditionError

ACCEPTED, REJECTED, INCONCLUSIVE = "accepted", "rejected", "inconclusive"

MAX_CLOSURE_VALUE = 10**8


# ---------------------------------------------------------------------------
# helpers


def four_squares(n: int) -> tuple:
    """Nonnegative a >= b >= c >= d with a^2+b^2+c^2+d^2 = n."""
    if n < 0:
        raise ValueError("need a nonnegative integer")
    if n > MAX_CLOSURE_VALUE:
        raise PreconditionError(
            f"closure decomposition is capped at {MAX_CLOSURE_VALUE}"
        )
    for a in range(isqrt(n), -1, -1):
        m = n - a * a
        if m > 3 * a * a:
            break
        for b in range(min(a, isqrt(m)), -1, -1):
            r = m - b * b
            if r > 2 * b * b:
                break
            for c in range(min(b, isqrt(r)), -1, -1):
                rem = r - c * c
                if rem > c * c:
                    break
                d = isqrt(rem)
                if d * d == rem:
                    return (a, b, c, d)
    raise AssertionError("four-square decomposition always exists")


def _as_rational(u) -> Fraction | None:
    if isinstance(u, QuadElem):
        return u.a if u.is_rational() else None
    return Fraction(u)


def choose_challenge_prime(ctx: CurveContext, D: int, q: int | None = None) -> int:
    """The smallest good prime that does not split in Q(sqrt(D)), or a
    validated explicit choice."""
    if q is not None:
        if q in ctx.bad_primes:
            raise PreconditionError(f"challenge prime {q} is bad for the curve")
        if splitting_type(q, D) == SPLIT:
            raise PreconditionError(
                f"challenge prime {q} splits in the quadratic field; "
                "rational ratios would approximate its irrationals"
            )
        return q
    p = 3
    while True:
        if isprime(p) and p not in ctx.bad_primes and splitting_type(p, D) != SPLIT:
            return p
        p += 2


def _ord(value, qp) -> int | None:
    """Valuation at the quadratic prime; None stands for +infinity."""
    if isinstance(value, QuadElem):
        if value.is_zero():
            return None
    elif value == 0:
        return None
    return quad_valuation(value, qp)


def _closure_parts(u: Fraction) -> tuple[list, list]:
    """Express |numerator| and denominator as sums of four squares;
    returns ([(label, k), ...] with zero parts dropped, notes)."""
    notes = []
    if u < 0:
        notes.append("negative value handled through the negation closure")
    parts = []
    num = abs(u.numerator)
    parts.extend(("numerator", k) for k in four_squares(num) if k)
    if u.denominator != 1:
        notes.append("fractional value handled through the ratio closure")
        parts.extend(("denominator", k) for k in four_squares(u.denominator) if k)
    return parts, notes


# ---------------------------------------------------------------------------
# report


@dataclass
class VerticalReport:
    kind: str
    status: str
    depth: int
    q: int
    apparition: int
    primes: tuple
    parts: list = field(default_factory=list)
    levels: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "status": self.status,
            "depth": self.depth,
            "challenge_prime": self.q,
            "apparition_index": self.apparition,
            "primes_above": [
                {"p": qp.p, "kind": qp.kind} for qp in self.primes
            ],
            "parts": [{"role": lbl, "k": k} for lbl, k in self.parts],
            "levels": self.levels,
            "notes": self.notes,
        }


def _row(qp, ord_deep, ord_diff, needed, strict: bool) -> dict:
    if ord_diff is None:
        ok = True
    elif strict:
        ok = needed < 2 * ord_diff
    else:
        ok = 2 * ord_diff >= needed
    return {
        "p": qp.p,
        "kind": qp.kind,
        "ord_deep": ord_deep,
        "ord_diff": ord_diff,
        "needed": needed,
        "ok": ok,
    }


# ---------------------------------------------------------------------------
# shared machinery


class _Challenge:
    def __init__(
        self,
        ctx: CurveContext,
        D: int,
        q: int | None,
        index_cap: int,
        stride: int = 1,
    ):
        self.ctx = ctx
        self.D = D
        self.q = choose_challenge_prime(ctx, D, q)
        self.apparition = order_mod_p(ctx.P, ctx.curve, self.q)
        self.primes = primes_above(self.q, D)
        self.index_cap = index_cap
        self.stride = stride
        self._ladder = self._build_ladder()

    def x(self, n: int) -> Fraction:
        pt = self.ctx.point(n)
        if pt.is_infinity:
            raise PreconditionError(f"index {n} hits the point at infinity")
        return pt.x

    def _build_ladder(self) -> list:
        """Indices stride * apparition * q^s within the cap, most shallow
        first."""
        out = []
        n = self.stride * self.apparition
        while n <= self.index_cap:
            out.append(n)
            n *= self.q
        return out

    def min_ord(self, value) -> int | None:
        ords = [_ord(value, qp) for qp in self.primes]
        if any(o is None for o in ords):
            return None
        return min(ords)

    def deep_indices(self, level: int) -> list:
        """Ladder indices whose x-coordinate is deeper than the level at
        every prime above q."""
        out = []
        for n in self._ladder:
            o = self.min_ord(self.x(n))
            if o is not None and o < -level:
                out.append(n)
        return out


def _diff(u, ratio: Fraction, D: int):
    if isinstance(u, QuadElem):
        return QuadElem(D, ratio, Fraction(0)) - u
    return ratio - Fraction(u)


# ---------------------------------------------------------------------------
# rank-one descent checker


def rankonedown_check(
    u,
    D: int,
    ctx: CurveContext,
    depth: int = 3,
    q: int | None = None,
    index_cap: int = 120,
    m1: int = 1,
) -> VerticalReport:
    """Challenge u in Q(sqrt(D)) to prove rational membership through
    coordinate ratios: at every level v <= depth there must be indices
    j | l with ord x_j < -v at each prime above the challenge prime and
    -ord x_j < 2 ord(x_j / x_l - u') strictly, where u' runs over the
    square parts of u's closure decomposition.

    Rational u is driven through the targeted witnesses (l = k*j for
    each four-square part k, numerators and denominators separately);
    irrational u is scanned exhaustively within the index cap and
    rejected with margin certificates when no level witness exists.
    """
    ch = _Challenge(ctx, D, q, index_cap, stride=m1)
    rat = _as_rational(u)
    report = VerticalReport(
        kind="rank-one-descent",
        status=ACCEPTED,
        depth=depth,
        q=ch.q,
        apparition=ch.apparition,
        primes=ch.primes,
    )

    if rat is not None and rat == 0:
        report.notes.append("zero is a trivial member; no challenge needed")
        return report

    if rat is not None:
        parts, notes = _closure_parts(rat)
        report.parts = parts
        report.notes.extend(notes)
        for level in range(1, depth + 1):
            deep = ch.deep_indices(level)
            entry = {"level": level, "witnesses": []}
            if not deep:
                report.status = INCONCLUSIVE
                entry["note"] = "no ladder index deep enough within the cap"
                report.levels.append(entry)
                continue
            for lbl, k in parts:
                j = deep[0]
                l = k * j
                if l > 8 * ch.index_cap:
                    report.status = INCONCLUSIVE
                    entry["witnesses"].append(
                        {"role": lbl, "k": k, "j": j, "l": l, "ok": False,
                         "note": "witness index beyond budget"}
                    )
                    continue
                rows = []
                target = k * k
                xj = ch.x(j)
                ratio = xj / ch.x(l)
                d = _diff(target, ratio, D)
                for qp in ch.primes:
                    oj = _ord(xj, qp)
                    od = _ord(d, qp)
                    rows.append(_row(qp, oj, od, -oj, strict=True))
                good = all(r["ok"] for r in rows)
                entry["witnesses"].append(
                    {"role": lbl, "k": k, "j": j, "l": l, "rows": rows, "ok": good}
                )
                if not good:
                    report.status = INCONCLUSIVE
            report.levels.append(entry)
        if report.status == ACCEPTED:
            report.notes.append(
                f"membership certified at every level up to depth {depth}"
            )
        return report

    # irrational: exhaustive bounded scan
    found_all = True
    for level in range(1, depth + 1):
        deep = ch.deep_indices(level)
        entry = {"level": level, "witness": None, "certificates": []}
        if not deep:
            report.status = INCONCLUSIVE
            entry["note"] = "no ladder index deep enough within the cap"
            report.levels.append(entry)
            found_all = False
            continue
        witness = None
        for j in deep:
            for l in range(j, ch.index_cap + 1, j):
                rows = []
                xj = ch.x(j)
                ratio = xj / ch.x(l)
                d = _diff(u, ratio, D)
                for qp in ch.primes:
                    oj = _ord(xj, qp)
                    od = _ord(d, qp)
                    rows.append(_row(qp, oj, od, -oj, strict=True))
                if all(r["ok"] for r in rows):
                    witness = {"j": j, "l": l, "rows": rows}
                    break
                if len(entry["certificates"]) < 40:
                    entry["certificates"].append({"j": j, "l": l, "rows": rows})
            if witness:
                break
        entry["witness"] = witness
        report.levels.append(entry)
        if witness is None:
            found_all = False
    if found_all:
        report.status = ACCEPTED
        report.notes.append(
            "scan found witnesses at every level; claim holds up to depth"
        )
    elif report.status != INCONCLUSIVE:
        report.status = REJECTED
        report.notes.append(
            f"no witness pair (j, l) with l <= {ch.index_cap} at some level; "
            "certificates carry the failing margins"
        )
    return report


# ---------------------------------------------------------------------------
# subfield membership checker


def subfield_check(
    u,
    D: int,
    ctx: CurveContext,
    r: int = 2,
    depth: int = 3,
    q: int | None = None,
    index_cap: int = 120,
) -> VerticalReport:
    """Challenge u through ratios of r-multiples: at every level there
    must be coordinates a1 = x_{jr}, a2 = x_{kjr}, both deeper than the
    level at each prime above the challenge prime, with
    2 ord(u - a1/a2) >= -ord a2 (non-strict).

    Precondition: u must be integral at every prime above the challenge
    prime (negative order raises a precondition error); order zero is
    allowed.
    """
    if r < 1:
        raise ValueError("the multiple index r must be positive")
    ch = _Challenge(ctx, D, q, index_cap, stride=r)
    for qp in ch.primes:
        ou = _ord(u, qp)
        if ou is not None and ou < 0:
            raise PreconditionError(
                f"u is not integral at the prime above {ch.q} "
                f"(order {ou}); the challenge is undefined there"
            )
    rat = _as_rational(u)
    report = VerticalReport(
        kind="subfield-membership",
        status=ACCEPTED,
        depth=depth,
        q=ch.q,
        apparition=ch.apparition,
        primes=ch.primes,
    )

    if rat is not None and rat == 0:
        report.notes.append("zero is a trivial member; no challenge needed")
        return report

    if rat is not None:
        parts, notes = _closure_parts(rat)
        report.parts = parts
        report.notes.extend(notes)
        for level in range(1, depth + 1):
            deep = ch.deep_indices(level)
            entry = {"level": level, "witnesses": []}
            if not deep:
                report.status = INCONCLUSIVE
                entry["note"] = "no ladder index deep enough within the cap"
                report.levels.append(entry)
                continue
            for lbl, k in parts:
                base = deep[0]
                a1_idx, a2_idx = base, k * base
                if a2_idx > 8 * ch.index_cap:
                    report.status = INCONCLUSIVE
                    entry["witnesses"].append(
                        {"role": lbl, "k": k, "a1_index": a1_idx,
                         "a2_index": a2_idx, "ok": False,
                         "note": "witness index beyond budget"}
                    )
                    continue
                rows = []
                target = k * k
                a2 = ch.x(a2_idx)
                ratio = ch.x(a1_idx) / a2
                d = _diff(target, ratio, D)
                for qp in ch.primes:
                    o2 = _ord(a2, qp)
                    od = _ord(d, qp)
                    rows.append(_row(qp, o2, od, -o2, strict=False))
                good = all(r["ok"] for r in rows)
                entry["witnesses"].append(
                    {
                        "role": lbl,
                        "k": k,
                        "a1_index": a1_idx,
                        "a2_index": a2_idx,
                        "rows": rows,
                        "ok": good,
                    }
                )
                if not good:
                    report.status = INCONCLUSIVE
            report.levels.append(entry)
        if report.status == ACCEPTED:
            report.notes.append(
                f"membership certified at every level up to depth {depth}"
            )
        return report

    found_all = True
    for level in range(1, depth + 1):
        deep = ch.deep_indices(level)
        entry = {"level": level, "witness": None, "certificates": []}
        if not deep:
            report.status = INCONCLUSIVE
            entry["note"] = "no ladder index deep enough within the cap"
            report.levels.append(entry)
            found_all = False
            continue
        base = deep[0]
        witness = None
        mults = range(1, ch.index_cap // base + 1)
        for p_mult in mults:
            for s_mult in mults:
                a1_idx, a2_idx = p_mult * base, s_mult * base
                a2 = ch.x(a2_idx)
                ratio = ch.x(a1_idx) / a2
                d = _diff(u, ratio, D)
                rows = []
                for qp in ch.primes:
                    o2 = _ord(a2, qp)
                    od = _ord(d, qp)
                    rows.append(_row(qp, o2, od, -o2, strict=False))
                if all(r["ok"] for r in rows):
                    witness = {"a1_index": a1_idx, "a2_index": a2_idx, "rows": rows}
                    break
                if len(entry["certificates"]) < 40:
                    entry["certificates"].append(
                        {"a1_index": a1_idx, "a2_index": a2_idx, "rows": rows}
                    )
            if witness:
                break
        entry["witness"] = witness
        report.levels.append(entry)
        if witness is None:
            found_all = False
    if found_all:
        report.status = ACCEPTED
        report.notes.append(
            "scan found witnesses at every level; claim holds up to depth"
        )
    elif report.status != INCONCLUSIVE:
        report.status = REJECTED
        report.notes.append(
            f"no witness ratio within index cap {ch.index_cap} at some level; "
            "certificates carry the failing margins"
        )
    return report
