"""Hot counting kernels with numba-accelerated and pure-numpy backends.

Everything here works on machine-sized integers (prime sieves, residue
characters, point counts mod p).  Each kernel has two implementations:

* a numba ``@njit`` version, used when numba imports cleanly, and
* a pure-numpy fallback.

Set ``DEFLAB_PURE_NUMPY=1`` in the environment to force the numpy path
(useful for benchmarking and on platforms without a working numba).  The
two backends return identical values; ``benchmarks/bench_kernels.py``
compares their speed.
"""

from __future__ import annotations

import os

import numpy as np

_FORCE_NUMPY = os.environ.get("DEFLAB_PURE_NUMPY", "") not in ("", "0")

if not _FORCE_NUMPY:
    try:
        from numba import njit

        _HAVE_NUMBA = True
    except ImportError:
        _HAVE_NUMBA = False
else:
    _HAVE_NUMBA = False

BACKEND = "numba" if _HAVE_NUMBA else "numpy"


# ---------------------------------------------------------------------------
# prime sieve


def _sieve_np(limit: int) -> np.ndarray:
    flags = np.ones(limit + 1, dtype=np.bool_)
    flags[:2] = False
    for p in range(2, int(limit**0.5) + 1):
        if flags[p]:
            flags[p * p :: p] = False
    return flags


if _HAVE_NUMBA:

    @njit(cache=True)
    def _sieve_nb(limit):
        flags = np.ones(limit + 1, dtype=np.bool_)
        flags[0] = False
        if limit >= 1:
            flags[1] = False
        p = 2
        while p * p <= limit:
            if flags[p]:
                for k in range(p * p, limit + 1, p):
                    flags[k] = False
            p += 1
        return flags


def prime_flags(limit: int) -> np.ndarray:
    """Boolean array f with f[n] true iff n is prime, n <= limit."""
    if limit < 1:
        return np.zeros(max(limit + 1, 0), dtype=np.bool_)
    if _HAVE_NUMBA:
        return _sieve_nb(limit)
    return _sieve_np(limit)


def primes_upto(limit: int) -> np.ndarray:
    """All primes <= limit as an int64 array."""
    return np.flatnonzero(prime_flags(limit)).astype(np.int64)


def prime_count(limit: int) -> int:
    """pi(limit), exact."""
    if limit < 2:
        return 0
    return int(prime_flags(limit).sum())


# ---------------------------------------------------------------------------
# splitting of odd primes in a quadratic field
#
# Both kernels receive the array of odd primes not dividing the
# discriminant; the caller classifies 2 and the ramified primes.


def _split_counts_np(odd_primes: np.ndarray, chi_table: np.ndarray, modulus: int):
    vals = chi_table[odd_primes % modulus]
    split = int(np.count_nonzero(vals == 1))
    inert = int(np.count_nonzero(vals == -1))
    return split, inert


if _HAVE_NUMBA:

    @njit(cache=True)
    def _split_counts_nb(odd_primes, disc_abs, disc_sign):
        split = 0
        inert = 0
        for i in range(odd_primes.shape[0]):
            p = odd_primes[i]
            a = disc_abs % p
            if disc_sign < 0 and a != 0:
                a = p - a
            # Euler criterion: a^((p-1)/2) mod p
            e = (p - 1) // 2
            base = a % p
            acc = 1
            while e > 0:
                if e & 1:
                    acc = acc * base % p
                base = base * base % p
                e >>= 1
            if acc == 1:
                split += 1
            else:
                inert += 1
        return split, inert


def splitting_counts(D: int, limit: int) -> tuple[int, int, int]:
    """(split, inert, ramified) counts over all primes <= limit in Q(sqrt(D)).

    The numba backend runs an Euler-criterion power per prime; the numpy
    backend evaluates the discriminant character from a residue table
    (the character is periodic mod |disc| for a fundamental discriminant).
    """
    from .arith import fundamental_discriminant, kronecker, splitting_type

    disc = fundamental_discriminant(D)
    ps = primes_upto(limit)
    if ps.size == 0:
        return 0, 0, 0
    split = inert = ramified = 0
    odd = ps[ps > 2]
    ram_mask = (disc % odd) == 0
    special = ([2] if limit >= 2 else []) + [int(t) for t in odd[ram_mask]]
    for p in special:
        kind = splitting_type(p, D)
        if kind == "split":
            split += 1
        elif kind == "inert":
            inert += 1
        else:
            ramified += 1
    odd = odd[~ram_mask]
    if _HAVE_NUMBA:
        s, i = _split_counts_nb(odd, abs(disc), 1 if disc >= 0 else -1)
    else:
        modulus = abs(disc)
        chi = np.array([kronecker(disc, n) for n in range(modulus)], dtype=np.int8)
        s, i = _split_counts_np(odd, chi, modulus)
    return split + s, inert + i, ramified


# ---------------------------------------------------------------------------
# degree-one counting for a cyclic field of odd prime degree
#
# For q = 1 (mod p) and r an element of order p mod q, a rational prime
# v != q is degree one iff v^((q-1)/p) == 1 (mod q), i.e. iff v mod q is
# a p-th power residue.


def _cyclic_counts_np(primes: np.ndarray, q: int, exponent: int):
    table = np.zeros(q, dtype=np.bool_)
    for c in range(1, q):
        table[c] = pow(c, exponent, q) == 1
    vals = table[primes % q]
    deg_one = int(np.count_nonzero(vals))
    return deg_one, int(primes.size - deg_one)


if _HAVE_NUMBA:

    @njit(cache=True)
    def _cyclic_counts_nb(primes, q, exponent):
        deg_one = 0
        for i in range(primes.shape[0]):
            p = primes[i] % q
            acc = 1
            base = p
            e = exponent
            while e > 0:
                if e & 1:
                    acc = acc * base % q
                base = base * base % q
                e >>= 1
            if acc == 1:
                deg_one += 1
        return deg_one, primes.shape[0] - deg_one


def cyclic_degree_one_counts(p: int, q: int, limit: int) -> tuple[int, int, int]:
    """(degree_one, higher_degree, ramified) prime counts up to limit for
    the degree-p cyclic field inside the q-th cyclotomic field.

    Requires q prime with q == 1 (mod p).  The prime q itself is the only
    ramified one.
    """
    if (q - 1) % p != 0:
        raise ValueError("need q == 1 (mod p)")
    ps = primes_upto(limit)
    ps = ps[ps != q]
    ramified = 1 if limit >= q else 0
    if ps.size == 0:
        return 0, 0, ramified
    exponent = (q - 1) // p
    if _HAVE_NUMBA:
        d1, rest = _cyclic_counts_nb(ps, q, exponent)
    else:
        d1, rest = _cyclic_counts_np(ps, q, exponent)
    return int(d1), int(rest), ramified


# ---------------------------------------------------------------------------
# affine point count on y^2 = x^3 + a x + b over F_p


def _curve_count_np(a: int, b: int, p: int) -> int:
    x = np.arange(p, dtype=np.int64)
    rhs = (x * x % p * x + a * x + b) % p
    sq = np.zeros(p, dtype=np.int64)
    y = np.arange(p, dtype=np.int64)
    counts = np.bincount(y * y % p, minlength=p)
    sq[: counts.size] = counts
    return int(sq[rhs].sum())


if _HAVE_NUMBA:

    @njit(cache=True)
    def _curve_count_nb(a, b, p):
        counts = np.zeros(p, dtype=np.int64)
        for y in range(p):
            counts[y * y % p] += 1
        total = 0
        for x in range(p):
            rhs = (x * x % p * x + a * x + b) % p
            total += counts[rhs]
        return total


def curve_point_count(a: int, b: int, p: int) -> int:
    """#E(F_p) for y^2 = x^3 + a x + b, including the point at infinity.

    Exhaustive count; intended for p up to about 10**7.  Requires good
    reduction (p not dividing the discriminant) to be meaningful.
    """
    if p < 3:
        raise ValueError("need an odd prime p")
    a %= p
    b %= p
    if _HAVE_NUMBA:
        return int(_curve_count_nb(a, b, p)) + 1
    return _curve_count_np(a, b, p) + 1
