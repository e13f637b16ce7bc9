"""Exponentially weighted densities of finite integer sets.

For a set S of positive integers, f_S(t) = sum_{n in S} exp(-n t).  The
smoothed density at scale T is

    (1 / log T) * int_{1/T}^{1} f_S(t) dt
        = (1 / log T) * sum_{n in S} (exp(-n/T) - exp(-n)) / n,

which is evaluated in that closed form.  Sums run over ascending n through
``math.fsum`` so they are correctly rounded and independent of chunking.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .arithcore import InvalidRange, primes_upto, primorial_range

__all__ = [
    "NonpositiveT",
    "InvalidT",
    "InvalidWindow",
    "EPS",
    "FiniteIntegerSet",
    "DensityReport",
    "SieveCheck",
    "BonferroniCheck",
    "f_value",
    "upper_bound_check",
    "log_integral",
    "smoothed_density",
    "lower_density_estimate",
    "coprime_filter",
    "divide_set",
    "sieve_bound_check",
    "bonferroni_check",
    "leq",
    "read_set_file",
    "write_set_file",
]

EPS = 1e-9


class NonpositiveT(ValueError):
    pass


class InvalidT(ValueError):
    pass


class InvalidWindow(ValueError):
    pass


class FiniteIntegerSet:
    """Sorted set of positive integers, all at most ``universe_bound``."""

    __slots__ = ("elements", "universe_bound")

    def __init__(self, elements=(), universe_bound: int | None = None):
        if not isinstance(elements, np.ndarray):
            elements = list(elements)
        arr = np.unique(np.asarray(elements, dtype=np.int64))
        if arr.size and arr[0] < 1:
            raise ValueError("elements must be positive integers")
        top = int(arr[-1]) if arr.size else 0
        if universe_bound is None:
            universe_bound = max(top, 1)
        if top > universe_bound:
            raise ValueError(f"element {top} exceeds universe bound {universe_bound}")
        arr.setflags(write=False)
        self.elements = arr
        self.universe_bound = int(universe_bound)

    @classmethod
    def interval(cls, lo: int, hi: int) -> "FiniteIntegerSet":
        return cls(np.arange(lo, hi + 1, dtype=np.int64), hi)

    @classmethod
    def from_mask(cls, mask: np.ndarray) -> "FiniteIntegerSet":
        """Set of i >= 1 with mask[i] true; the universe is len(mask) - 1."""
        idx = np.flatnonzero(mask)
        return cls(idx[idx >= 1], len(mask) - 1)

    def mask(self) -> np.ndarray:
        out = np.zeros(self.universe_bound + 1, dtype=bool)
        out[self.elements] = True
        return out

    def __len__(self):
        return int(self.elements.size)

    def __iter__(self):
        return (int(n) for n in self.elements)

    def __contains__(self, n) -> bool:
        i = np.searchsorted(self.elements, n)
        return bool(i < self.elements.size and self.elements[i] == n)

    def __eq__(self, other):
        if not isinstance(other, FiniteIntegerSet):
            return NotImplemented
        return self.universe_bound == other.universe_bound and np.array_equal(self.elements, other.elements)

    def __repr__(self):
        head = ", ".join(str(n) for n in self.elements[:8])
        more = ", ..." if len(self) > 8 else ""
        return f"FiniteIntegerSet({{{head}{more}}}, N={self.universe_bound})"

    def intersection(self, other: "FiniteIntegerSet") -> "FiniteIntegerSet":
        elems = np.intersect1d(self.elements, other.elements, assume_unique=True)
        return FiniteIntegerSet(elems, min(self.universe_bound, other.universe_bound))

    def union(self, other: "FiniteIntegerSet") -> "FiniteIntegerSet":
        return FiniteIntegerSet(
            np.union1d(self.elements, other.elements), max(self.universe_bound, other.universe_bound)
        )

    def scaled(self, m: int) -> "FiniteIntegerSet":
        """{m n : n in S}; the set m S_m of the multiples of m in a set."""
        return FiniteIntegerSet(self.elements * m, self.universe_bound * m)

    def min(self) -> int | None:
        return int(self.elements[0]) if len(self) else None


@dataclass(frozen=True)
class DensityReport:
    T: float
    value: float
    truncation_error_bound: float


def _check_t(t: float):
    if not t > 0:
        raise NonpositiveT(f"t must be positive, got {t}")


def f_value(S: FiniteIntegerSet, t: float) -> float:
    """sum over n in S of exp(-n t)."""
    _check_t(t)
    if not len(S):
        return 0.0
    return math.fsum(np.exp(-S.elements * float(t)))


def upper_bound_check(t: float) -> float:
    """2 max(1/t, 1), which dominates f_S(t) for every S."""
    _check_t(t)
    return 2.0 * max(1.0 / t, 1.0)


def log_integral(S: FiniteIntegerSet, T: float) -> float:
    """Exact integral of f_S over [1/T, 1] (not yet divided by log T)."""
    if not T > 1:
        raise InvalidT(f"T must exceed 1, got {T}")
    if not len(S):
        return 0.0
    n = S.elements.astype(np.float64)
    # exp(-n/T) - exp(-n) without cancellation
    terms = np.exp(-n / T) * -np.expm1(-n * (1.0 - 1.0 / T)) / n
    return math.fsum(terms)


def smoothed_density(S: FiniteIntegerSet, T: float) -> DensityReport:
    """Finite-T approximant of the smoothed density of S.

    truncation_error_bound caps what elements above the universe bound N
    could add: sum_{n > N} exp(-n/T)/n <= exp(-(N+1)/T) / ((N+1)(1 - exp(-1/T))),
    divided by log T.
    """
    value = log_integral(S, T) / math.log(T)
    N = S.universe_bound
    tail = math.exp(-(N + 1) / T) / ((N + 1) * -math.expm1(-1.0 / T))
    return DensityReport(float(T), value, tail / math.log(T))


def lower_density_estimate(S: FiniteIntegerSet, n0: int) -> float:
    """min over n0 <= n <= N of |S cap [1, n]| / n."""
    N = S.universe_bound
    if not 1 <= n0 <= N:
        raise InvalidWindow(f"need 1 <= n0 <= N={N}, got {n0}")
    counts = np.cumsum(S.mask()[1:])
    n = np.arange(n0, N + 1)
    return float(np.min(counts[n0 - 1 :] / n))


def coprime_filter(S: FiniteIntegerSet, m: int) -> FiniteIntegerSet:
    """Elements of S coprime to m."""
    if m < 1:
        raise ValueError("m must be positive")
    if m == 1 or not len(S):
        return S
    keep = np.gcd(S.elements, np.int64(m)) == 1 if m < 2**62 else np.array(
        [math.gcd(int(n), m) == 1 for n in S.elements], dtype=bool
    )
    return FiniteIntegerSet(S.elements[keep], S.universe_bound)


def divide_set(S: FiniteIntegerSet, m: int) -> FiniteIntegerSet:
    """{n : m n in S}, on the universe floor(N / m)."""
    if m < 1:
        raise ValueError("m must be positive")
    if m == 1:
        return S
    e = S.elements
    return FiniteIntegerSet(e[e % m == 0] // m, max(S.universe_bound // m, 1))


def leq(lhs: float, rhs: float, eps: float = EPS) -> bool:
    """lhs <= rhs up to eps, relative to the size of the numbers involved."""
    return lhs <= rhs + eps * max(1.0, abs(lhs), abs(rhs))


@dataclass(frozen=True)
class SieveCheck:
    lhs: float
    rhs: float
    holds: bool
    corrected_rhs: float
    corrected_holds: bool


def sieve_bound_check(S: FiniteIntegerSet, a: int, b: int, t: float) -> SieveCheck:
    """Compare f over the part of S free of primes in [a, b] with its bound.

    rhs is t^-1 * prod_{a <= p <= b} (1 - 1/p).  That bound can fail by a
    bounded amount, so the always-valid bound phi(P) e^-t / (1 - e^(-P t)),
    with P the product of the primes, is reported next to it.  It follows
    from each block [iP + 1, (i+1)P] holding phi(P) integers prime to P.
    """
    if not 1 < a <= b:
        raise InvalidRange(f"need 1 < a <= b, got a={a}, b={b}")
    _check_t(t)
    P = primorial_range(a, b)
    lhs = f_value(coprime_filter(S, P), t)
    ps = [int(p) for p in primes_upto(b) if p >= a]
    rhs = math.prod(1.0 - 1.0 / p for p in ps) / t
    phi = math.prod(p - 1 for p in ps)
    corrected = float(phi) * math.exp(-t) / -math.expm1(-min(P * t, 745.0))
    return SieveCheck(lhs, rhs, leq(lhs, rhs), corrected, leq(lhs, corrected))


@dataclass(frozen=True)
class BonferroniCheck:
    union_f: float
    sum_f: float
    pairwise_f: float
    upper_holds: bool
    lower_holds: bool


def bonferroni_check(sets, t: float) -> BonferroniCheck:
    """First two Bonferroni inequalities for f over a union of sets."""
    _check_t(t)
    sets = list(sets)
    if not sets:
        raise ValueError("need at least one set")
    union = sets[0]
    for s in sets[1:]:
        union = union.union(s)
    union_f = f_value(union, t)
    sum_f = math.fsum(f_value(s, t) for s in sets)
    pairwise_f = math.fsum(
        f_value(sets[i].intersection(sets[j]), t) for i in range(len(sets)) for j in range(i + 1, len(sets))
    )
    return BonferroniCheck(
        union_f,
        sum_f,
        pairwise_f,
        leq(union_f, sum_f),
        leq(sum_f - pairwise_f, union_f),
    )


# --------------------------------------------------------------------------
# set files


def read_set_file(path) -> FiniteIntegerSet:
    """Newline-separated integers; ``#`` comments; optional ``N=<bound>``."""
    N = None
    values = []
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("N="):
            N = int(line[2:])
            continue
        values.append(int(line))
    return FiniteIntegerSet(values, N)


def format_set(S: FiniteIntegerSet, header: str | None = None) -> str:
    lines = []
    if header:
        lines += [f"# {h}" for h in header.splitlines()]
    lines.append(f"N={S.universe_bound}")
    lines += [str(n) for n in S.elements]
    return "\n".join(lines) + "\n"


def write_set_file(path, S: FiniteIntegerSet, header: str | None = None) -> None:
    from ._io import atomic_write

    atomic_write(path, format_set(S, header))
