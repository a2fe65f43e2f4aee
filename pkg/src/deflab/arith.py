"""Exact integer and quadratic-field arithmetic.

Budgeted integer factorization (trial division, perfect-power reduction,
deterministic Brent rho), Kronecker symbols, prime splitting in a real or
imaginary quadratic field Q(sqrt(D)), and exact valuations of field
elements at prime ideals via p-adic square-root lifting.

Primality testing is delegated to sympy.isprime (deterministic for 64-bit
inputs, Baillie-PSW above that with no known pseudoprimes; see README for
the documented error model).  Integer roots use gmpy2 when available.
"""

from __future__ import annotations

import bisect
import math
import sys
from dataclasses import dataclass
from fractions import Fraction

from sympy import isprime, sieve

# Sequence denominators reach tens of thousands of digits; the default
# CPython guard on int<->str conversion (4300 digits) would make printing
# or hashing them raise.  Raise it once, high enough for any index this
# package can reach within its budgets.
if hasattr(sys, "set_int_max_str_digits"):
    sys.set_int_max_str_digits(2_000_000)

try:
    from gmpy2 import iroot as _g_iroot

    def _int_kth_root(n: int, k: int) -> tuple[int, bool]:
        r, exact = _g_iroot(n, k)
        return int(r), bool(exact)

except ImportError:  # pragma: no cover - gmpy2 is a soft dependency

    def _int_kth_root(n: int, k: int) -> tuple[int, bool]:
        if k == 1:
            return n, True
        r = int(round(n ** (1.0 / k)))
        while r > 0 and r**k > n:
            r -= 1
        while (r + 1) ** k <= n:
            r += 1
        return r, r**k == n


# ---------------------------------------------------------------------------
# small helpers


def vp(n: int, p: int) -> int:
    """p-adic valuation of a nonzero integer."""
    if n == 0:
        raise ValueError("valuation of zero is undefined")
    n = abs(n)
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def vp_frac(x: Fraction, p: int) -> int:
    """p-adic valuation of a nonzero rational."""
    if x == 0:
        raise ValueError("valuation of zero is undefined")
    return vp(x.numerator, p) - vp(x.denominator, p)


def is_perfect_square(n: int) -> bool:
    return n >= 0 and math.isqrt(n) ** 2 == n


def is_square_rational(x: Fraction) -> bool:
    return is_perfect_square(x.numerator) and is_perfect_square(x.denominator)


def is_squarefree(n: int) -> bool:
    if n in (0,):
        return False
    n = abs(n)
    if n == 1:
        return True
    d = 2
    while d * d * d <= n:
        if n % (d * d) == 0:
            return False
        while n % d == 0:
            n //= d
        d += 1
    return not is_perfect_square(n) or n == 1


def strip_primes(n: int, primes) -> int:
    """Remove every factor of each given prime from n."""
    n = abs(n)
    for p in primes:
        while n % p == 0 and n > 1:
            n //= p
    return n


def strip_support_of(n: int, m: int) -> int:
    """Remove from n every prime that also divides m, by repeated gcd.

    Works without factoring either argument, so it is usable on values far
    beyond factoring range.
    """
    n = abs(n)
    m = abs(m)
    if n == 0:
        raise ValueError("cannot strip support from zero")
    g = math.gcd(n, m)
    while g > 1:
        n //= g
        g = math.gcd(n, g)
    return n


def support_subset(n: int, m: int) -> bool:
    """True when every prime dividing n also divides m (no factoring)."""
    return strip_support_of(n, m) == 1


# ---------------------------------------------------------------------------
# factorization


@dataclass(frozen=True)
class FactorBudget:
    """Effort bounds for factor().  Deterministic for a fixed budget."""

    trial_bound: int = 1_000_000
    rho_iterations: int = 400_000
    rho_restarts: int = 16
    seed: int = 1


DEFAULT_BUDGET = FactorBudget()


@dataclass(frozen=True)
class Factorization:
    """value == product(p**e) * cofactor.

    ``factors`` holds proven prime factors sorted by prime.  ``cofactor``
    is 1 when ``complete``; otherwise it is a composite (or unresolved)
    remainder with no prime factor below the trial bound used.
    """

    value: int
    factors: tuple[tuple[int, int], ...]
    cofactor: int = 1
    complete: bool = True

    def __post_init__(self):
        prod = self.cofactor
        for p, e in self.factors:
            prod *= p**e
        if prod != self.value:
            raise ValueError("factorization does not multiply back to value")

    def exponent(self, p: int) -> int:
        for q, e in self.factors:
            if q == p:
                return e
        return 0

    def primes(self) -> tuple[int, ...]:
        return tuple(p for p, _ in self.factors)

    def resolved_part(self) -> int:
        out = 1
        for p, e in self.factors:
            out *= p**e
        return out

    def to_dict(self) -> dict:
        return {
            "value": str(self.value),
            "factors": [[str(p), e] for p, e in self.factors],
            "cofactor": str(self.cofactor),
            "complete": self.complete,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Factorization":
        return cls(
            value=int(d["value"]),
            factors=tuple((int(p), int(e)) for p, e in d["factors"]),
            cofactor=int(d["cofactor"]),
            complete=bool(d["complete"]),
        )


_SMALL_PRIMES: list[int] = []
_SMALL_PRIME_BOUND = 0


def small_primes(bound: int) -> list[int]:
    """Primes up to bound (cached, grows monotonically)."""
    global _SMALL_PRIMES, _SMALL_PRIME_BOUND
    if bound > _SMALL_PRIME_BOUND:
        _SMALL_PRIMES = list(sieve.primerange(2, bound + 1))
        _SMALL_PRIME_BOUND = bound
    if bound == _SMALL_PRIME_BOUND:
        return _SMALL_PRIMES
    return _SMALL_PRIMES[: bisect.bisect_right(_SMALL_PRIMES, bound)]


def _brent_rho(n: int, max_iters: int, c: int) -> tuple[int | None, int]:
    """Brent-cycle Pollard rho with increment c.

    Returns (factor or None, iterations used).  Deterministic.
    """
    if n % 2 == 0:
        return 2, 0
    y, r, q = 2, 1, 1
    g, x, ys = 1, 2, 2
    iters = 0
    m = 128
    while g == 1:
        x = y
        for _ in range(r):
            y = (y * y + c) % n
        iters += r
        k = 0
        while k < r and g == 1:
            ys = y
            steps = min(m, r - k)
            for _ in range(steps):
                y = (y * y + c) % n
                q = q * abs(x - y) % n
            iters += steps
            g = math.gcd(q, n)
            k += m
        r *= 2
        if iters > max_iters and g == 1:
            return None, iters
    if g == n:
        g = 1
        while g == 1:
            ys = (ys * ys + c) % n
            g = math.gcd(abs(x - ys), n)
            iters += 1
            if iters > 4 * max_iters:
                return None, iters
    if g == n or g == 1:
        return None, iters
    return g, iters


def factor(n: int, budget: FactorBudget | None = None) -> Factorization:
    """Factor a positive integer within an effort budget.

    Never raises on hard inputs: unresolved composite parts are carried in
    ``cofactor`` with ``complete=False``.  Deterministic for a fixed
    budget.
    """
    if n < 1:
        raise ValueError("factor() requires n >= 1")
    budget = budget or DEFAULT_BUDGET
    if n == 1:
        return Factorization(value=1, factors=())

    found: dict[int, int] = {}
    rest = n
    for p in small_primes(budget.trial_bound):
        if p * p > rest:
            break
        if rest % p == 0:
            e = 0
            while rest % p == 0:
                rest //= p
                e += 1
            found[p] = found.get(p, 0) + e
    trial_bound = budget.trial_bound

    # work queue of (value, multiplicity) pending pieces
    pending: list[tuple[int, int]] = [(rest, 1)] if rest > 1 else []
    unresolved: list[tuple[int, int]] = []
    iters_left = budget.rho_iterations

    while pending:
        m, mult = pending.pop()
        if m == 1:
            continue
        if m <= trial_bound * trial_bound or isprime(m):
            # below the square of the trial bound any survivor is prime
            found[m] = found.get(m, 0) + mult
            continue
        # perfect powers: value denominators here are often exact squares
        reduced = False
        for k in range(2, m.bit_length() + 1):
            root, exact = _int_kth_root(m, k)
            if root < 2:
                break
            if exact:
                pending.append((root, mult * k))
                reduced = True
                break
        if reduced:
            continue
        split = None
        for attempt in range(budget.rho_restarts):
            if iters_left <= 0:
                break
            c = budget.seed + attempt
            split, used = _brent_rho(m, iters_left, c)
            iters_left -= used
            if split is not None:
                break
        if split is None:
            unresolved.append((m, mult))
        else:
            pending.append((split, mult))
            pending.append((m // split, mult))

    cofactor = 1
    for m, mult in unresolved:
        cofactor *= m**mult
    factors = tuple(sorted(found.items()))
    return Factorization(
        value=n, factors=factors, cofactor=cofactor, complete=cofactor == 1
    )


# ---------------------------------------------------------------------------
# Kronecker symbol and modular square roots


def kronecker(a: int, n: int) -> int:
    """Kronecker symbol (a|n) for arbitrary integers."""
    if n == 0:
        return 1 if abs(a) == 1 else 0
    if a % 2 == 0 and n % 2 == 0:
        return 0
    v = 0
    while n % 2 == 0:
        n //= 2
        v += 1
    k = 1
    if v % 2 == 1 and a % 8 not in (1, 7):
        k = -1
    if n < 0:
        n = -n
        if a < 0:
            k = -k
    a %= n
    while a != 0:
        v = 0
        while a % 2 == 0:
            a //= 2
            v += 1
        if v % 2 == 1 and n % 8 in (3, 5):
            k = -k
        if a % 4 == 3 and n % 4 == 3:
            k = -k
        a, n = n % a, a
    return k if n == 1 else 0


def sqrt_mod_prime(a: int, p: int) -> int:
    """A square root of a modulo an odd prime p (Tonelli-Shanks).

    Raises ValueError when a is a non-residue.
    """
    a %= p
    if a == 0:
        return 0
    if p == 2:
        return a % 2
    if kronecker(a, p) != 1:
        raise ValueError(f"{a} is not a quadratic residue mod {p}")
    if p % 4 == 3:
        return pow(a, (p + 1) // 4, p)
    # Tonelli-Shanks
    q, s = p - 1, 0
    while q % 2 == 0:
        q //= 2
        s += 1
    z = 2
    while kronecker(z, p) != -1:
        z += 1
    m, c, t, r = s, pow(z, q, p), pow(a, q, p), pow(a, (q + 1) // 2, p)
    while t != 1:
        i, t2 = 0, t
        while t2 != 1:
            t2 = t2 * t2 % p
            i += 1
        b = pow(c, 1 << (m - i - 1), p)
        m, c = i, b * b % p
        t, r = t * c % p, r * b % p
    return r


def lift_sqrt(a: int, p: int, k: int) -> int:
    """r with r*r == a (mod p**k), for a a unit square mod p.

    For p == 2 this requires a == 1 (mod 8).  The returned root is the
    canonical branch: for odd p the lift of min(r0, p - r0); for p == 2
    the branch with r == 1 (mod 4).
    """
    if k < 1:
        raise ValueError("precision k must be >= 1")
    if p == 2:
        a %= 1 << max(k, 3)
        if a % 8 != 1:
            raise ValueError("2-adic square root needs a == 1 mod 8")
        if k <= 3:
            return 1
        r = 1
        for j in range(3, k):
            if (a - r * r) >> j & 1:
                r += 1 << (j - 1)
        return r % (1 << k)
    r = sqrt_mod_prime(a, p)
    r = min(r, p - r) if r != 0 else 0
    if r == 0:
        raise ValueError("a must be a unit mod p")
    pk = p
    while pk < p**k:
        pk = pk * pk
        inv = pow(2 * r, -1, pk)
        r = (r + (a - r * r) * inv) % pk
    return r % (p**k)


# ---------------------------------------------------------------------------
# quadratic fields


def fundamental_discriminant(D: int) -> int:
    """Discriminant of Q(sqrt(D)) for squarefree D."""
    _check_field_d(D)
    return D if D % 4 == 1 else 4 * D


def _check_field_d(D: int):
    if D in (0, 1) or not is_squarefree(D):
        raise ValueError(f"field parameter D must be squarefree and not 0 or 1, got {D}")


def _coerce_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    raise TypeError(f"expected an exact rational, got {type(x).__name__}")


@dataclass(frozen=True)
class QuadElem:
    """Element a + b*sqrt(D) of Q(sqrt(D)), exact rational coordinates."""

    D: int
    a: Fraction
    b: Fraction

    def __post_init__(self):
        _check_field_d(self.D)
        object.__setattr__(self, "a", _coerce_fraction(self.a))
        object.__setattr__(self, "b", _coerce_fraction(self.b))

    # -- algebra ----------------------------------------------------------
    def _coerce(self, other) -> "QuadElem":
        if isinstance(other, QuadElem):
            if other.D != self.D:
                raise ValueError("mixed field parameters")
            return other
        return QuadElem(self.D, _coerce_fraction(other), Fraction(0))

    def __add__(self, other):
        o = self._coerce(other)
        return QuadElem(self.D, self.a + o.a, self.b + o.b)

    __radd__ = __add__

    def __neg__(self):
        return QuadElem(self.D, -self.a, -self.b)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        o = self._coerce(other)
        return QuadElem(
            self.D,
            self.a * o.a + self.D * self.b * o.b,
            self.a * o.b + self.b * o.a,
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        n = o.norm()
        if n == 0:
            raise ZeroDivisionError("division by zero element")
        conj = o.conjugate()
        num = self * conj
        return QuadElem(self.D, num.a / n, num.b / n)

    def conjugate(self) -> "QuadElem":
        return QuadElem(self.D, self.a, -self.b)

    def norm(self) -> Fraction:
        return self.a * self.a - self.D * self.b * self.b

    def trace(self) -> Fraction:
        return 2 * self.a

    def is_zero(self) -> bool:
        return self.a == 0 and self.b == 0

    def is_rational(self) -> bool:
        return self.b == 0

    def __str__(self):
        return f"{self.a} + {self.b}*sqrt({self.D})"


SPLIT, INERT, RAMIFIED = "split", "inert", "ramified"


def splitting_type(p: int, D: int) -> str:
    """How the rational prime p behaves in Q(sqrt(D))."""
    _check_field_d(D)
    if not isprime(p):
        raise ValueError(f"{p} is not prime")
    disc = fundamental_discriminant(D)
    if p == 2:
        if disc % 2 == 0:
            return RAMIFIED
        return SPLIT if disc % 8 == 1 else INERT
    if disc % p == 0:
        return RAMIFIED
    return SPLIT if kronecker(disc, p) == 1 else INERT


@dataclass(frozen=True)
class QuadPrime:
    """A prime ideal of Q(sqrt(D)) above the rational prime p.

    ``r`` is a square root of D mod p fixing the embedding for split
    primes (canonically the smaller root; conjugate_index=1 selects the
    other ideal).  ``kind`` is one of split/inert/ramified.
    """

    D: int
    p: int
    kind: str
    r: int | None = None
    conjugate_index: int = 0

    def __post_init__(self):
        if self.kind not in (SPLIT, INERT, RAMIFIED):
            raise ValueError(f"unknown prime kind {self.kind!r}")
        if self.conjugate_index not in (0, 1):
            raise ValueError("conjugate_index must be 0 or 1")
        if self.conjugate_index == 1 and self.kind != SPLIT:
            raise ValueError("only split primes have a conjugate")

    @property
    def residue_degree(self) -> int:
        return 2 if self.kind == INERT else 1

    @property
    def ramification_index(self) -> int:
        return 2 if self.kind == RAMIFIED else 1

    def conjugate(self) -> "QuadPrime":
        if self.kind != SPLIT:
            return self
        return QuadPrime(self.D, self.p, self.kind, self.r, 1 - self.conjugate_index)


def quad_prime(p: int, D: int, conjugate_index: int = 0) -> QuadPrime:
    """The prime ideal above p in Q(sqrt(D)), of the given embedding."""
    kind = splitting_type(p, D)
    if kind != SPLIT and conjugate_index:
        raise ValueError("only split primes have a conjugate")
    r = None
    if kind == SPLIT and p > 2:
        r0 = sqrt_mod_prime(D % p, p)
        r = min(r0, p - r0)
    elif kind == SPLIT:
        r = 1  # D == 1 mod 8; the 2-adic branch is fixed in lift_sqrt
    elif kind == RAMIFIED and p > 2 and D % p == 0:
        r = 0
    return QuadPrime(D, p, kind, r, conjugate_index)


def primes_above(p: int, D: int) -> tuple[QuadPrime, ...]:
    kind = splitting_type(p, D)
    if kind == SPLIT:
        return (quad_prime(p, D, 0), quad_prime(p, D, 1))
    return (quad_prime(p, D),)


def _split_valuation(a: Fraction, b: Fraction, q: QuadPrime) -> int:
    """ord at a split prime via a p-adic evaluation of a + b*sqrt(D)."""
    p = q.p
    if b == 0:
        return vp_frac(a, p)
    if a == 0:
        return vp_frac(b, p)
    m = min(vp_frac(a, p), vp_frac(b, p))
    pm = Fraction(p) ** m
    a1, b1 = a / pm, b / pm
    norm1 = a1 * a1 - q.D * b1 * b1
    # both conjugate valuations of the scaled element are >= 0 and sum to
    # vp(norm1), so the answer is detected at precision vp(norm1) + 2
    k = (vp_frac(norm1, p) if norm1 != 0 else 0) + 2
    if q.D % p == 0:
        raise ValueError("split prime cannot divide D")
    root = lift_sqrt(q.D % p**k if p > 2 else q.D, p, k)
    if q.conjugate_index == 1:
        root = (-root) % p**k
    pk = p**k
    ai = a1.numerator * pow(a1.denominator, -1, pk) % pk
    bi = b1.numerator * pow(b1.denominator, -1, pk) % pk
    t = (ai + bi * root) % pk
    if t == 0:
        # valuation exceeds what the norm allows for this branch; the
        # whole of vp(norm1) sits on this conjugate
        return m + vp_frac(norm1, p)
    return m + vp(t, p)


def quad_valuation(x, q: QuadPrime) -> int:
    """Exact valuation ord_q(x) of a nonzero element of Q(sqrt(D)).

    Accepts ints, Fractions, or QuadElem (matching D).  Normalized so a
    uniformizer has valuation 1; at a ramified prime the rational prime p
    itself has valuation 2.
    """
    if isinstance(x, (int, Fraction)):
        x = QuadElem(q.D, _coerce_fraction(x), Fraction(0))
    if not isinstance(x, QuadElem):
        raise TypeError("quad_valuation needs a field element")
    if x.D != q.D:
        raise ValueError("element and prime live in different fields")
    if x.is_zero():
        raise ValueError("valuation of zero is undefined")
    p = q.p
    if q.kind == INERT:
        # norm = +/- p^(2 ord) * unit, so this is exact even over the
        # half-integer basis of D == 1 mod 4 fields
        return vp_frac(x.norm(), p) // 2
    if q.kind == RAMIFIED:
        return vp_frac(x.norm(), p)
    return _split_valuation(x.a, x.b, q)
