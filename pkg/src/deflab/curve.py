"""Exact arithmetic on rational points of elliptic curves.

Short Weierstrass models y^2 = x^3 + a x + b with integer coefficients,
exact rational group law, torsion bookkeeping, and point orders modulo
good primes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .arith import DEFAULT_BUDGET, factor, is_perfect_square, vp
from .errors import BadPrimeError, BudgetExhaustedError, InfinityError, OffCurveError
from . import kernels


@dataclass(frozen=True)
class Point:
    """An exact rational point, or the point at infinity (both None)."""

    x: Fraction | None = None
    y: Fraction | None = None

    def __post_init__(self):
        if (self.x is None) != (self.y is None):
            raise ValueError("affine points need both coordinates")
        if self.x is not None:
            object.__setattr__(self, "x", Fraction(self.x))
            object.__setattr__(self, "y", Fraction(self.y))

    @classmethod
    def infinity(cls) -> "Point":
        return cls()

    @classmethod
    def of(cls, x, y) -> "Point":
        return cls(Fraction(x), Fraction(y))

    @property
    def is_infinity(self) -> bool:
        return self.x is None

    def __neg__(self) -> "Point":
        if self.is_infinity:
            return self
        return Point(self.x, -self.y)

    def __str__(self):
        return "O" if self.is_infinity else f"({self.x}, {self.y})"


INFINITY = Point.infinity()


@dataclass(frozen=True)
class Curve:
    """y^2 = x^3 + a x + b with integer coefficients and disc != 0."""

    a: int
    b: int

    def __post_init__(self):
        if self.discriminant == 0:
            raise ValueError("curve is singular (discriminant zero)")

    @property
    def discriminant(self) -> int:
        return -16 * (4 * self.a**3 + 27 * self.b**2)

    def contains(self, P: Point) -> bool:
        if P.is_infinity:
            return True
        return P.y * P.y == P.x**3 + self.a * P.x + self.b

    def require(self, P: Point):
        if not self.contains(P):
            raise OffCurveError(f"point {P} is not on y^2 = x^3 + {self.a}x + {self.b}")


def add(P: Point, Q: Point, curve: Curve) -> Point:
    """Chord-tangent sum of two points."""
    if P.is_infinity:
        return Q
    if Q.is_infinity:
        return P
    if P.x == Q.x and P.y == -Q.y:
        return INFINITY
    if P == Q:
        lam = (3 * P.x * P.x + curve.a) / (2 * P.y)
    else:
        lam = (Q.y - P.y) / (Q.x - P.x)
    x3 = lam * lam - P.x - Q.x
    return Point(x3, lam * (P.x - x3) - P.y)


def scalar_mul(n: int, P: Point, curve: Curve) -> Point:
    """n*P by double-and-add, any integer n."""
    if n < 0:
        return scalar_mul(-n, -P, curve)
    R = INFINITY
    B = P
    while n:
        if n & 1:
            R = add(R, B, curve)
        n >>= 1
        if n:
            B = add(B, B, curve)
    return R


def _integer_divisors(n: int) -> list[int]:
    n = abs(n)
    fac = factor(n)
    divs = [1]
    for p, e in fac.factors:
        divs = [d * p**k for d in divs for k in range(e + 1)]
    if not fac.complete:  # pragma: no cover - tiny inputs in practice
        raise BudgetExhaustedError("divisor enumeration needs a full factorization")
    return sorted(divs)


def _integer_roots_monic_cubic(a1: int, a0: int) -> list[int]:
    """Integer roots of x^3 + a1*x + a0."""
    roots = []
    if a0 == 0:
        roots.append(0)
        # remaining quadratic x^2 + a1
        if a1 < 0 and is_perfect_square(-a1):
            r = math.isqrt(-a1)
            roots.extend([r, -r])
        return sorted(set(roots))
    for d in _integer_divisors(a0):
        for r in (d, -d):
            if r**3 + a1 * r + a0 == 0:
                roots.append(r)
    return sorted(set(roots))


def torsion_points(curve: Curve) -> list[Point]:
    """All rational torsion points (Lutz-Nagell sieve, Mazur bound 12)."""
    delta0 = abs(4 * curve.a**3 + 27 * curve.b**2)
    candidates: list[Point] = []
    ys = [0]
    y = 1
    while y * y <= 16 * delta0:
        if (16 * delta0) % (y * y) == 0:
            ys.append(y)
        y += 1
    for y0 in ys:
        for x0 in _integer_roots_monic_cubic(curve.a, curve.b - y0 * y0):
            P = Point.of(x0, y0)
            if curve.contains(P):
                candidates.append(P)
                if y0 != 0:
                    candidates.append(-P)
    out = [INFINITY]
    seen = {(None, None)}
    for P in candidates:
        key = (P.x, P.y)
        if key in seen:
            continue
        R = P
        for _ in range(12):
            R = add(R, P, curve)
            if R.is_infinity:
                out.append(P)
                seen.add(key)
                break
    return out


def torsion_multiple(curve: Curve, Q: Point) -> int:
    """Twice the order of the rational torsion subgroup.

    The doubling guarantees an even value whose multiples of Q land in
    twice the free part of the group generated by Q.
    """
    curve.require(Q)
    return 2 * len(torsion_points(curve))


def reduce_point(P: Point, p: int) -> tuple[int, int] | None:
    """Coordinates of P mod p (None for infinity).

    Raises BadPrimeError when a denominator of P is divisible by p: the
    reduction would be the point at infinity and p belongs to the bad set
    for sequence purposes.
    """
    if P.is_infinity:
        return None
    if P.x.denominator % p == 0 or P.y.denominator % p == 0:
        raise BadPrimeError(f"point has p = {p} in a denominator")
    xm = P.x.numerator * pow(P.x.denominator, -1, p) % p
    ym = P.y.numerator * pow(P.y.denominator, -1, p) % p
    return xm, ym


def _mod_add(P, Q, a: int, p: int):
    if P is None:
        return Q
    if Q is None:
        return P
    x1, y1 = P
    x2, y2 = Q
    if x1 == x2 and (y1 + y2) % p == 0:
        return None
    if P == Q:
        lam = (3 * x1 * x1 + a) * pow(2 * y1, -1, p) % p
    else:
        lam = (y2 - y1) * pow(x2 - x1, -1, p) % p
    x3 = (lam * lam - x1 - x2) % p
    return x3, (lam * (x1 - x3) - y1) % p


def _mod_mul(n: int, P, a: int, p: int):
    R = None
    B = P
    while n:
        if n & 1:
            R = _mod_add(R, B, a, p)
        n >>= 1
        if n:
            B = _mod_add(B, B, a, p)
    return R


NAIVE_COUNT_LIMIT = 10_000


def count_points(curve: Curve, p: int) -> int:
    """#E(F_p) including infinity.  Naive count for p <= 10**4, order
    reconstruction inside the Hasse window above that."""
    if p <= 2 or curve.discriminant % p == 0:
        raise BadPrimeError(f"p = {p} is a bad prime for this curve")
    if p <= NAIVE_COUNT_LIMIT:
        return kernels.curve_point_count(curve.a, curve.b, p)
    # lcm point orders until a unique Hasse-window multiple remains
    lo = p + 1 - 2 * math.isqrt(p)
    hi = p + 1 + 2 * math.isqrt(p)
    L = 1
    a = curve.a % p
    b = curve.b % p
    tried = 0
    for x in range(p):
        if tried >= 40:
            break
        rhs = (x * x % p * x + a * x + b) % p
        if rhs == 0:
            y = 0
        elif pow(rhs, (p - 1) // 2, p) == 1:
            y = _sqrt_mod(rhs, p)
        else:
            continue
        tried += 1
        m = _point_order_mod((x, y), curve, p)
        L = L * m // math.gcd(L, m)
        k0 = -(-lo // L)
        if k0 * L > hi:
            raise BudgetExhaustedError("no order multiple in Hasse window", {"p": p})
        if (k0 + 1) * L > hi:
            return k0 * L
    raise BudgetExhaustedError("could not pin the group order", {"p": p})


def _sqrt_mod(a: int, p: int) -> int:
    from .arith import sqrt_mod_prime

    return sqrt_mod_prime(a, p)


def _bsgs_annihilator(Pbar, curve: Curve, p: int) -> int:
    """Some m in the Hasse window with m*Pbar = O (so ord | m)."""
    width = 4 * math.isqrt(p) + 1
    s = math.isqrt(width) + 1
    a = curve.a
    baby = {}
    R = None
    for j in range(s + 1):
        baby[R] = j
        R = _mod_add(R, Pbar, a, p)
    start = p + 1 - 2 * math.isqrt(p)
    A = _mod_mul(start, Pbar, a, p)
    G = _mod_mul(s, Pbar, a, p)
    negG = None if G is None else (G[0], (-G[1]) % p)
    T = A
    for i in range(s + 2):
        if T in baby:
            j = baby[T]
            # start + i*s + (-j) ... we looked up T = -(j P) + ... sign care below
            m = start + i * s - j
            if m > 0 and _mod_mul(m, Pbar, a, p) is None:
                return m
            m = start + i * s + j
            if m > 0 and _mod_mul(m, Pbar, a, p) is None:
                return m
        Tneg = None if T is None else (T[0], (-T[1]) % p)
        if Tneg in baby:
            j = baby[Tneg]
            m = start + i * s + j
            if m > 0 and _mod_mul(m, Pbar, a, p) is None:
                return m
        T = _mod_add(T, G, a, p)
    raise BudgetExhaustedError("baby-step giant-step failed", {"p": p})


def _point_order_mod(Pbar, curve: Curve, p: int) -> int:
    if Pbar is None:
        return 1
    if p <= NAIVE_COUNT_LIMIT:
        m = count_points(curve, p)
    else:
        m = _bsgs_annihilator(Pbar, curve, p)
    # reduce the annihilating multiple to the exact order
    fac = factor(m)
    order = m
    for q, _ in fac.factors:
        while order % q == 0 and _mod_mul(order // q, Pbar, curve.a, p) is None:
            order //= q
    return order


def order_mod_p(P: Point, curve: Curve, p: int) -> int:
    """Order of P mod p in E(F_p).  Requires good reduction at p."""
    curve.require(P)
    if p <= 2 or curve.discriminant % p == 0:
        raise BadPrimeError(f"p = {p} is a bad prime for this curve")
    Pbar = reduce_point(P, p)
    return _point_order_mod(Pbar, curve, p)


# ---------------------------------------------------------------------------
# working context for divisibility sequences


@dataclass
class CurveContext:
    """A curve with a chosen infinite-order generator and derived data.

    ``Q`` is the configured generator (the rank-one generator property is
    a trusted input; see README).  ``t`` is a verified even multiple of
    the torsion order.  ``P = point_scale * Q`` is the working point the
    divisibility sequence is built from.  ``bad_primes`` holds every
    prime dividing the discriminant, the prime 2, and all primes in the
    denominators of P.
    """

    curve: Curve
    Q: Point
    t: int
    P: Point
    point_scale: int
    bad_primes: frozenset[int]
    _cache: dict[int, Point] = field(default_factory=dict, repr=False)

    @classmethod
    def build(
        cls,
        curve: Curve,
        Q: Point,
        point_scale: int = 1,
        t_override: int | None = None,
    ) -> "CurveContext":
        curve.require(Q)
        if Q.is_infinity:
            raise InfinityError("generator must be an affine point")
        n_tors = len(torsion_points(curve))
        t = 2 * n_tors if t_override is None else t_override
        if t_override is not None:
            if t_override % 2 != 0 or t_override <= 0:
                raise ValueError("t override must be a positive even integer")
            if t_override % n_tors != 0:
                raise ValueError("t override must be a multiple of the torsion order")
        if point_scale < 1:
            raise ValueError("point scale must be a positive integer")
        P = scalar_mul(point_scale, Q, curve)
        if P.is_infinity:
            raise InfinityError("scaled generator is torsion; need infinite order")
        bad = {2}
        disc_fac = factor(abs(curve.discriminant), DEFAULT_BUDGET)
        if not disc_fac.complete:
            raise BudgetExhaustedError("cannot resolve the discriminant's primes")
        bad.update(disc_fac.primes())
        den_fac = factor(P.x.denominator * P.y.denominator)
        if not den_fac.complete:
            raise BudgetExhaustedError("cannot resolve the generator denominator")
        bad.update(den_fac.primes())
        ctx = cls(
            curve=curve,
            Q=Q,
            t=t,
            P=P,
            point_scale=point_scale,
            bad_primes=frozenset(bad),
        )
        ctx._cache[0] = INFINITY
        ctx._cache[1] = P
        return ctx

    def point(self, n: int) -> Point:
        """n*P with shared memoization (n >= 0)."""
        if n < 0:
            raise ValueError("sequence indices are nonnegative")
        cached = self._cache.get(n)
        if cached is not None:
            return cached
        if n % 2 == 0:
            half = self.point(n // 2)
            val = add(half, half, self.curve)
        else:
            val = add(self.point(n - 1), self.P, self.curve)
        self._cache[n] = val
        return val
