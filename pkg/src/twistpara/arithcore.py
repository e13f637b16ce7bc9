"""Exact integer and rational support: factoring, square classes, F2 algebra.

Square classes are elements of Q*/(Q*)^2.  Each is stored canonically as a
sign together with the sorted tuple of primes that occur to an odd power, so
equal classes compare and hash equal.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational

import numpy as np

__all__ = [
    "BudgetExceeded",
    "InvalidRange",
    "Factorization",
    "SquareClass",
    "ClassMatrix",
    "primes_upto",
    "is_prime",
    "factorize",
    "squarefree_kernel",
    "square_class",
    "class_product",
    "find_dependency",
    "f2_independent",
    "primorial_range",
    "as_fraction",
]

DEFAULT_TRIAL_BOUND = 10**6
DEFAULT_RHO_ITERATIONS = 2 * 10**6
DEFAULT_SEED = 20070301


class BudgetExceeded(ArithmeticError):
    """A cofactor survived trial division and the rho stage."""

    def __init__(self, n, cofactor):
        super().__init__(f"could not factor cofactor {cofactor} of {n} within budget")
        self.n = n
        self.cofactor = cofactor


class InvalidRange(ValueError):
    pass


def as_fraction(q) -> Fraction:
    """Coerce ints, Fractions and ``"num/den"`` strings to Fraction."""
    if isinstance(q, Fraction):
        return q
    if isinstance(q, (int, Rational)):
        return Fraction(q)
    if isinstance(q, str):
        return Fraction(q.strip())
    raise TypeError(f"expected an exact rational, got {type(q).__name__}")


# --------------------------------------------------------------------------
# primes

_small_cache = {"limit": 1, "primes": np.zeros(0, dtype=np.int64)}


def primes_upto(n: int) -> np.ndarray:
    """Sorted int64 array of primes p <= n (sieve of Eratosthenes)."""
    if n < 2:
        return np.zeros(0, dtype=np.int64)
    if n <= _small_cache["limit"]:
        ps = _small_cache["primes"]
        return ps[: np.searchsorted(ps, n, side="right")]
    flags = np.ones(n + 1, dtype=bool)
    flags[:2] = False
    flags[4::2] = False
    for p in range(3, math.isqrt(n) + 1, 2):
        if flags[p]:
            flags[p * p :: 2 * p] = False
    ps = np.flatnonzero(flags).astype(np.int64)
    if n <= 10**7:
        _small_cache["limit"] = n
        _small_cache["primes"] = ps
    return ps


_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)


def is_prime(n: int) -> bool:
    """Miller-Rabin with the first 13 prime bases.

    Deterministic for n < 3.3e24, which covers everything the pipeline
    produces; beyond that it is a strong probable-prime test.
    """
    if n < 2:
        return False
    for p in _MR_BASES:
        if n % p == 0:
            return n == p
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_BASES:
        x = pow(a, d, n)
        if x == 1 or x == n - 1:
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def _rho(n: int, rng: random.Random, iterations: int) -> int | None:
    """Brent's variant of Pollard rho; returns a nontrivial factor or None."""
    if n % 2 == 0:
        return 2
    spent = 0
    while spent < iterations:
        y, c, m = rng.randrange(1, n), rng.randrange(1, n), 128
        g = r = q = 1
        x = ys = y
        while g == 1 and spent < iterations:
            x = y
            for _ in range(r):
                y = (y * y + c) % n
            k = 0
            while k < r and g == 1:
                ys = y
                for _ in range(min(m, r - k)):
                    y = (y * y + c) % n
                    q = q * abs(x - y) % n
                g = math.gcd(q, n)
                k += m
            spent += r
            r *= 2
        if g == n:
            g = 1
            while g == 1:
                ys = (ys * ys + c) % n
                g = math.gcd(abs(x - ys), n)
        if 1 < g < n:
            return g
    return None


@dataclass(frozen=True)
class Factorization:
    """Prime factorization as ((p, e), ...) with p strictly increasing."""

    factors: tuple[tuple[int, int], ...] = ()

    @property
    def value(self) -> int:
        out = 1
        for p, e in self.factors:
            out *= p**e
        return out

    def __iter__(self):
        return iter(self.factors)

    def __len__(self):
        return len(self.factors)


def factorize(
    n: int,
    trial_bound: int = DEFAULT_TRIAL_BOUND,
    rho_iterations: int = DEFAULT_RHO_ITERATIONS,
    seed: int = DEFAULT_SEED,
) -> Factorization:
    """Factor ``n >= 1``: trial division up to ``trial_bound``, then rho.

    The rho stage uses a private RNG seeded with ``seed`` so the result and
    the work done are reproducible.  Raises BudgetExceeded if a composite
    cofactor survives ``rho_iterations`` steps.
    """
    n = int(n)
    if n < 1:
        raise ValueError(f"factorize needs n >= 1, got {n}")
    counts: dict[int, int] = {}
    m = n
    for p in (2, 3):
        while m % p == 0:
            counts[p] = counts.get(p, 0) + 1
            m //= p
    limit = min(trial_bound, math.isqrt(m))
    p = 5
    while p <= limit:
        for q in (p, p + 2):
            if m % q == 0:
                while m % q == 0:
                    counts[q] = counts.get(q, 0) + 1
                    m //= q
                limit = min(trial_bound, math.isqrt(m))
        p += 6
    if m > 1:
        rng = random.Random(seed)
        stack = [m]
        while stack:
            k = stack.pop()
            if k == 1:
                continue
            if k <= trial_bound**2 or is_prime(k):
                # anything left below trial_bound**2 has no factor <= trial_bound
                counts[k] = counts.get(k, 0) + 1
                continue
            r = math.isqrt(k)
            if r * r == k:
                stack += [r, r]
                continue
            f = _rho(k, rng, rho_iterations)
            if f is None:
                raise BudgetExceeded(n, k)
            stack += [f, k // f]
    return Factorization(tuple(sorted(counts.items())))


def squarefree_kernel(n: int, **budget) -> int:
    """Product of the primes dividing |n| to an odd power (n != 0)."""
    if n == 0:
        raise ValueError("zero has no squarefree kernel")
    out = 1
    for p, e in factorize(abs(n), **budget):
        if e % 2:
            out *= p
    return out


# --------------------------------------------------------------------------
# square classes


@dataclass(frozen=True, order=True)
class SquareClass:
    sign: int = 1
    odd_primes: tuple[int, ...] = ()

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")
        if any(a >= b for a, b in zip(self.odd_primes, self.odd_primes[1:])):
            raise ValueError("odd_primes must be strictly increasing")

    @property
    def representative(self) -> int:
        """The squarefree integer sign * prod(odd_primes)."""
        return self.sign * math.prod(self.odd_primes)

    @property
    def is_trivial(self) -> bool:
        return self.sign == 1 and not self.odd_primes

    def __mul__(self, other: "SquareClass") -> "SquareClass":
        return class_product(self, other)

    def __str__(self):
        return f"[{self.representative}]"


def square_class(q, **budget) -> SquareClass:
    """Class of a nonzero rational modulo squares.

    Numerator and denominator are treated alike since q and q * den**2 lie
    in the same class.
    """
    q = as_fraction(q)
    if q == 0:
        raise ValueError("zero has no square class")
    n = abs(q.numerator) * q.denominator
    primes = tuple(p for p, e in factorize(n, **budget) if e % 2)
    return SquareClass(1 if q > 0 else -1, primes)


def class_product(u: SquareClass, v: SquareClass) -> SquareClass:
    odd = tuple(sorted(set(u.odd_primes).symmetric_difference(v.odd_primes)))
    return SquareClass(u.sign * v.sign, odd)


class ClassMatrix:
    """Square classes as rows of an F2 matrix.

    Column 0 is the sign; the remaining columns are the union of all primes
    seen, in increasing order.  Rows are stored as Python int bitmasks.
    """

    def __init__(self, classes):
        self.classes = list(classes)
        primes = sorted({p for c in self.classes for p in c.odd_primes})
        self.columns = ["sign", *primes]
        col = {p: i + 1 for i, p in enumerate(primes)}
        self.rows = []
        for c in self.classes:
            bits = 1 if c.sign == -1 else 0
            for p in c.odd_primes:
                bits |= 1 << col[p]
            self.rows.append(bits)

    def _eliminate(self):
        """Gaussian elimination that also tracks row combinations.

        Returns (rank, first kernel combination or None); the combination is
        a bitmask over the original row indices.
        """
        pivots: dict[int, tuple[int, int]] = {}  # pivot bit -> (row, combo)
        first_kernel = None
        for i, row in enumerate(self.rows):
            combo = 1 << i
            while row:
                top = row.bit_length() - 1
                if top not in pivots:
                    pivots[top] = (row, combo)
                    break
                prow, pcombo = pivots[top]
                row ^= prow
                combo ^= pcombo
            else:
                if first_kernel is None:
                    first_kernel = combo
        return len(pivots), first_kernel

    def rank(self) -> int:
        return self._eliminate()[0]

    def kernel_vector(self) -> tuple[int, ...] | None:
        """Indices of a nonempty subset whose product is a square, if any."""
        combo = self._eliminate()[1]
        if combo is None:
            return None
        return tuple(i for i in range(len(self.rows)) if combo >> i & 1)


def find_dependency(classes) -> tuple[int, ...] | None:
    """Return 0-based indices of a dependent subset, or None if independent.

    The subset is the first kernel vector met during elimination, so the
    answer is deterministic.
    """
    return ClassMatrix(classes).kernel_vector()


def f2_independent(classes) -> bool:
    return find_dependency(classes) is None


def primorial_range(a: int, b: int) -> int:
    """Product of the primes p with a <= p <= b."""
    if a > b:
        raise InvalidRange(f"empty range [{a}, {b}]")
    if b < 2:
        return 1
    ps = primes_upto(int(b))
    ps = ps[ps >= a]
    return math.prod(int(p) for p in ps)
