"""Strict n-parallelepipeds inside finite integer sets.

A parallelepiped with base c and generators a_1..a_n is the set of the 2^n
products c * prod_{i in I} a_i.  It is strict when the a_i are independent
in Q*/(Q*)^2.  Two finders live here:

* ``brute_force_search`` builds every strict parallelepiped dimension by
  dimension from a ratio table; it is the ground truth at small scale.
* ``guided_search`` follows the inductive construction: pick primes p < q
  with S_p and S_q overlapping densely, recurse into S_p & S_q with p, q
  excluded, then multiply the base by p and append the generator q/p.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .arithcore import f2_independent, primes_upto, square_class
from .density import EPS, FiniteIntegerSet, divide_set, f_value, leq, log_integral, smoothed_density

__all__ = [
    "WindowTooNarrow",
    "NonpositiveDensity",
    "SearchExhausted",
    "Parallelepiped",
    "SearchLimits",
    "SearchTrace",
    "GuidedPolicy",
    "enumerate_elements",
    "is_strict",
    "verify_in_set",
    "brute_force_search",
    "select_prime_pair",
    "compute_window",
    "guided_search",
    "IndStepReport",
    "indstep_diagnostics",
    "format_record",
    "parse_record",
]


class WindowTooNarrow(ValueError):
    pass


class NonpositiveDensity(ValueError):
    pass


class SearchExhausted(Exception):
    def __init__(self, level: int, reason: str, trace: "SearchTrace | None" = None):
        super().__init__(f"level {level}: {reason}")
        self.level = level
        self.reason = reason
        self.trace = trace


@dataclass(frozen=True)
class Parallelepiped:
    c: Fraction
    generators: tuple[Fraction, ...]

    def __post_init__(self):
        object.__setattr__(self, "c", Fraction(self.c))
        object.__setattr__(self, "generators", tuple(Fraction(a) for a in self.generators))
        if not self.generators:
            raise ValueError("a parallelepiped needs at least one generator")
        if self.c <= 0 or any(a <= 0 for a in self.generators):
            raise ValueError("base and generators must be positive")

    @property
    def n(self) -> int:
        return len(self.generators)

    def elements(self) -> list[Fraction]:
        return enumerate_elements(self)

    def canonical_key(self):
        return (self.c, tuple(sorted(self.generators)))

    def restrict(self, indices) -> "Parallelepiped":
        return Parallelepiped(self.c, tuple(self.generators[i] for i in indices))


def enumerate_elements(P: Parallelepiped) -> list[Fraction]:
    """All 2^n subset products; bit i of the index selects generator i."""
    out = [P.c]
    for a in P.generators:
        out += [x * a for x in out]
    return out


@lru_cache(maxsize=1 << 16)
def _class_of(q: Fraction):
    return square_class(q)


def is_strict(P: Parallelepiped) -> bool:
    return f2_independent([_class_of(a) for a in P.generators])


def verify_in_set(P: Parallelepiped, S: FiniteIntegerSet) -> bool:
    return all(x.denominator == 1 and int(x) in S for x in enumerate_elements(P))


def _check_sound(P: Parallelepiped, S: FiniteIntegerSet) -> Parallelepiped:
    if not (is_strict(P) and verify_in_set(P, S)):
        raise RuntimeError(f"finder produced an invalid parallelepiped {P}")
    return P


# --------------------------------------------------------------------------
# exhaustive finder


@dataclass(frozen=True)
class SearchLimits:
    """Caps on the ratio table (per level) and on the number of results."""

    max_objects: int = 10**6
    max_results: int | None = None


def _is_square(q: Fraction) -> bool:
    n, d = q.numerator, q.denominator
    return math.isqrt(n) ** 2 == n and math.isqrt(d) ** 2 == d


def brute_force_search(S: FiniteIntegerSet, n: int, limits: SearchLimits | None = None) -> list[Parallelepiped]:
    """Every strict n-parallelepiped in S, in canonical form and order.

    Canonical form: c is the least element and the generators are > 1 and
    sorted.  Level 1 holds the pairs x < y in S with y/x not a square,
    grouped by the ratio y/x.  A level-(k+1) object joins two level-k
    objects with the same generators whose bases differ by a ratio r > 1,
    so each group of bases is a ratio table for the next level.
    """
    if n < 1:
        raise ValueError("dimension must be >= 1")
    limits = limits or SearchLimits()
    elems = [int(x) for x in S.elements]

    groups: dict[tuple, list[int]] = defaultdict(list)
    count = 0
    for i, x in enumerate(elems):
        if count >= limits.max_objects:
            break
        for y in elems[i + 1 :]:
            r = Fraction(y, x)
            if _is_square(r):
                continue
            groups[(r,)].append(x)
            count += 1
            if count >= limits.max_objects:
                break

    for _ in range(n - 1):
        nxt: dict[tuple, set[int]] = defaultdict(set)
        count = 0
        for gens in sorted(groups):
            cs = sorted(set(groups[gens]))
            for i, c in enumerate(cs):
                for c2 in cs[i + 1 :]:
                    new = tuple(sorted(gens + (Fraction(c2, c),)))
                    if not f2_independent([_class_of(a) for a in new]):
                        continue
                    nxt[new].add(c)
                    count += 1
                    if count >= limits.max_objects:
                        break
                if count >= limits.max_objects:
                    break
            if count >= limits.max_objects:
                break
        groups = {g: sorted(cs) for g, cs in nxt.items()}

    found = sorted((c, gens) for gens, cs in groups.items() for c in set(cs))
    if limits.max_results is not None:
        found = found[: limits.max_results]
    return [_check_sound(Parallelepiped(c, gens), S) for c, gens in found]


# --------------------------------------------------------------------------
# guided finder


def _window_primes(a: int, b: int) -> list[int]:
    return [int(p) for p in primes_upto(int(b)) if p >= a]


def _default_T(S: FiniteIntegerSet, top_prime: int) -> float:
    return max(math.e, S.universe_bound / (10.0 * top_prime))


def _rank_pairs(S: FiniteIntegerSet, primes: list[int], T: float):
    """(score, p, q, mask of S_p & S_q) for all p < q, best first."""
    mask = S.mask()
    N = S.universe_bound
    slices = {p: mask[::p] for p in primes}
    ranked = []
    for i, p in enumerate(primes):
        for q in primes[i + 1 :]:
            M = N // q
            inter = slices[p][: M + 1] & slices[q][: M + 1]
            inter[0] = False
            n = np.flatnonzero(inter)
            score = log_integral(FiniteIntegerSet(n, max(M, 1)), T) / math.log(T) if n.size else 0.0
            ranked.append((score, p, q, inter))
    # highest score first, ties broken by the smaller (p, q)
    ranked.sort(key=lambda r: (-r[0], r[1], r[2]))
    return ranked


def select_prime_pair(S: FiniteIntegerSet, window: tuple[int, int], T: float | None = None):
    """The primes p < q in the window maximizing the density of S_p & S_q.

    The score is the smoothed-density approximant at scale T (default
    N / (10 * largest prime in the window), at least e).  Returns (p, q, score).
    """
    primes = _window_primes(*window)
    if len(primes) < 2:
        raise WindowTooNarrow(f"window {window} holds fewer than two primes")
    T = T or _default_T(S, primes[-1])
    score, p, q, _ = _rank_pairs(S, primes, T)[0]
    return p, q, score


def compute_window(density_estimate: float, sigma_max: int, limit: int = 10**8) -> tuple[int, int | None]:
    """Prime window (a, b) from the induction step.

    a is the least prime above max(sigma_max, 12 / density); b is the least
    integer with prod_{a <= p <= b} (1 - 1/p) <= density / 4, or None when
    that b exceeds ``limit`` (by Mertens, b grows like exp(c / density)).
    """
    if not density_estimate > 0:
        raise NonpositiveDensity(f"density estimate must be positive, got {density_estimate}")
    floor_ = max(sigma_max, 12.0 / density_estimate)
    target = density_estimate / 4.0
    hi = 1024
    while True:
        ps = primes_upto(min(hi, limit))
        ps = ps[ps > floor_]
        if ps.size:
            # log-space running product
            logs = np.cumsum(np.log1p(-1.0 / ps.astype(np.float64)))
            hit = np.flatnonzero(logs <= math.log(target))
            if hit.size:
                return int(ps[0]), int(ps[hit[0]])
        if hi >= limit:
            a = int(ps[0]) if ps.size else _next_prime(floor_)
            return a, None
        hi *= 4


def _next_prime(x: float) -> int:
    from .arithcore import is_prime

    k = math.floor(x) + 1
    while not is_prime(k):
        k += 1
    return k


@dataclass
class SearchTrace:
    pairs: list[tuple[int, int]] = field(default_factory=list)
    densities: list[float] = field(default_factory=list)
    universe_bounds: list[int] = field(default_factory=list)

    def format(self) -> str:
        lines = ["level  p  q  density  universe"]
        for k, ((p, q), dens, N) in enumerate(zip(self.pairs, self.densities, self.universe_bounds), 1):
            lines.append(f"{k}  {p}  {q}  {dens:.6g}  {N}")
        return "\n".join(lines)


@dataclass(frozen=True)
class GuidedPolicy:
    """How the guided finder picks its prime windows.

    heuristic: primes in ``window`` above every prime used so far.
    rigorous: the window from ``compute_window`` applied to the current
        density estimate; usually out of reach at desk scale.
    ``tries`` ranked pairs are attempted per level before giving up.
    """

    mode: str = "heuristic"
    window: tuple[int, int] = (2, 97)
    universe_floor: int = 1000
    T: float | None = None
    tries: int = 3
    window_limit: int = 10**7

    def __post_init__(self):
        if self.mode not in ("heuristic", "rigorous"):
            raise ValueError(f"unknown policy mode {self.mode!r}")


def guided_search(S: FiniteIntegerSet, n: int, sigma=(), policy: GuidedPolicy | None = None):
    """Build a strict n-parallelepiped inside S by the inductive construction.

    Returns (Parallelepiped, SearchTrace); raises SearchExhausted naming the
    level that failed.  Generators are q_i / p_i for 2n distinct primes, all
    larger than every prime in ``sigma``.
    """
    if n < 1:
        raise ValueError("dimension must be >= 1")
    policy = policy or GuidedPolicy()
    trace = SearchTrace()
    try:
        c, gens = _guided(S, n, set(sigma), policy, trace, 1)
    except SearchExhausted as exc:
        exc.trace = trace
        raise
    return _check_sound(Parallelepiped(c, gens), S), trace


def _level_primes(S, used, policy, level):
    threshold = max(used, default=1)
    if policy.mode == "heuristic":
        a, b = policy.window
        primes = _window_primes(max(a, threshold + 1), b)
        T = policy.T or _default_T(S, b)
    else:
        T = policy.T or max(math.e, S.universe_bound / 100.0)
        est = smoothed_density(S, T).value
        if est <= 0:
            raise SearchExhausted(level, "density estimate is zero")
        a, b = compute_window(est, threshold, limit=policy.window_limit)
        if b is None:
            raise SearchExhausted(level, "window beyond the prime limit")
        if S.universe_bound // b < policy.universe_floor:
            raise SearchExhausted(level, "universe underflow")
        primes = _window_primes(a, b)
    if len(primes) < 2:
        raise SearchExhausted(level, "prime window exhausted")
    return primes, T


def _guided(S, n, used, policy, trace, level):
    if S.universe_bound < policy.universe_floor:
        raise SearchExhausted(level, "universe underflow")
    primes, T = _level_primes(S, used, policy, level)
    ranked = [r for r in _rank_pairs(S, primes, T) if r[0] > 0][: policy.tries]
    if not ranked:
        raise SearchExhausted(level, "every prime pair has an empty intersection")
    failure = None
    depth = len(trace.pairs)
    for score, p, q, inter in ranked:
        del trace.pairs[depth:], trace.densities[depth:], trace.universe_bounds[depth:]
        sub = FiniteIntegerSet.from_mask(inter)
        trace.pairs.append((p, q))
        trace.densities.append(score)
        trace.universe_bounds.append(sub.universe_bound)
        if n == 1:
            return Fraction(p * sub.min()), [Fraction(q, p)]
        try:
            c, gens = _guided(sub, n - 1, used | {p, q}, policy, trace, level + 1)
        except SearchExhausted as exc:
            failure = exc
            continue
        return p * c, gens + [Fraction(q, p)]
    raise failure


# --------------------------------------------------------------------------
# diagnostics for the induction step


@dataclass
class IndStepReport:
    a: int
    b: int
    T: float
    primes: list[int]
    mertens_product: float
    density: float
    hypotheses: dict[str, bool]
    pointwise: list[dict]
    integrated: dict[str, float]
    unconditional: dict[str, bool]
    conditional: dict[str, bool]
    pair_table: list[tuple[int, int, float, bool]]
    threshold: float

    @property
    def unconditional_ok(self) -> bool:
        return all(self.unconditional.values())

    def format(self) -> str:
        out = [
            f"window [{self.a}, {self.b}]  primes {self.primes}  T = {self.T:g}",
            f"density estimate D = {self.density:.9g}",
            f"prod (1 - 1/p) = {self.mertens_product:.9g}",
            "hypotheses (not asserted):",
        ]
        out += [f"  {k}: {v}" for k, v in self.hypotheses.items()]
        out.append("pointwise samples:")
        out.append("  t  f_S  f_coprime  sum_p f_Sp(pt)  sieve_rhs")
        for row in self.pointwise:
            out.append(
                f"  {row['t']:.4g}  {row['f_S']:.9g}  {row['f_coprime']:.9g}  "
                f"{row['sum_scaled']:.9g}  {row['sieve_rhs']:.9g}"
            )
        out.append("integrated quantities:")
        out += [f"  {k} = {v:.9g}" for k, v in self.integrated.items()]
        out.append("unconditional inequalities (must hold):")
        out += [f"  [{'ok' if v else 'FAIL'}] {k}" for k, v in self.unconditional.items()]
        out.append("conditional inequalities (reported only):")
        out += [f"  [{'holds' if v else 'fails'}] {k}" for k, v in self.conditional.items()]
        out.append(f"pair densities (threshold 1/((b-a)(1+b-a)) = {self.threshold:.6g}):")
        out += [f"  ({p}, {q})  {d:.9g}  {'>=' if hit else '<'} threshold" for p, q, d, hit in self.pair_table]
        return "\n".join(out)


def _geq(lhs, rhs, eps=EPS):
    return leq(rhs, lhs, eps)


def indstep_diagnostics(S: FiniteIntegerSet, a: int, b: int, T: float, t_samples=None) -> IndStepReport:
    """Evaluate the inequalities of the induction step on a finite set.

    Unconditional steps (the sum identity, the union bound over the prime
    multiples, the integrated inclusion-exclusion bound, the bound 2 on the
    union integral and the pigeonhole pair bound) are checked to EPS.  Steps
    that rest on the coprime-part bound or on the window hypotheses are
    reported without being asserted.
    """
    from .arithcore import InvalidRange, primorial_range
    from .density import InvalidT, coprime_filter

    if not 1 < a <= b:
        raise InvalidRange(f"need 1 < a <= b, got a={a}, b={b}")
    if not T > 1:
        raise InvalidT(f"T must exceed 1, got {T}")
    primes = _window_primes(a, b)
    logT = math.log(T)
    prod = math.prod(1.0 - 1.0 / p for p in primes)
    density = log_integral(S, T) / logT
    coprime = coprime_filter(S, primorial_range(a, b))
    Sp = {p: divide_set(S, p) for p in primes}
    if t_samples is None:
        t_samples = np.geomspace(1.0 / T, 1.0, 9)

    unconditional: dict[str, bool] = {}
    conditional: dict[str, bool] = {}
    pointwise = []
    for t in map(float, t_samples):
        fS = f_value(S, t)
        fR = f_value(coprime, t)
        scaled = math.fsum(f_value(Sp[p], p * t) for p in primes)
        direct = math.fsum(f_value(Sp[p].scaled(p), t) for p in primes)
        rhs = prod / t
        pointwise.append(dict(t=t, f_S=fS, f_coprime=fR, sum_scaled=scaled, sum_direct=direct, sieve_rhs=rhs))
        unconditional[f"sum f_Sp(pt) = sum f_pSp(t) at t={t:.4g}"] = leq(scaled, direct) and leq(direct, scaled)
        unconditional[f"sum f_pSp(t) >= f_S(t) - f_coprime(t) at t={t:.4g}"] = _geq(direct, fS - fR)
        conditional[f"f_coprime(t) <= prod/t at t={t:.4g}"] = leq(fR, rhs)
        conditional[f"sum f_pSp(t) >= f_S(t) - prod/t at t={t:.4g}"] = _geq(direct, fS - rhs)

    int_scaled = math.fsum(log_integral(Sp[p].scaled(p), T) for p in primes) / logT
    # substitution u = p t turns the integral over [1/T, 1] into one over [p/T, p]
    int_subst = (
        math.fsum(
            math.fsum((np.exp(-p * Sp[p].elements / T) - np.exp(-p * Sp[p].elements)) / Sp[p].elements) / p
            for p in primes
            if len(Sp[p])
        )
        / logT
    )
    int_coprime = log_integral(coprime, T) / logT
    big_sum = math.fsum(log_integral(Sp[p], T) for p in primes) / logT
    weighted = math.fsum(a / p * log_integral(Sp[p], T) for p in primes) / logT
    union = Sp[primes[0]] if primes else FiniteIntegerSet()
    for p in primes[1:]:
        union = union.union(Sp[p])
    int_union = log_integral(union, T) / logT

    table = []
    pair_sum_terms = []
    for i, p in enumerate(primes):
        for q in primes[i + 1 :]:
            d = log_integral(Sp[p].intersection(Sp[q]), T) / logT
            pair_sum_terms.append(d)
            table.append((p, q, d))
    pair_sum = math.fsum(pair_sum_terms)
    threshold = 1.0 / ((b - a) * (1 + b - a)) if b > a else math.inf
    pair_table = [(p, q, d, d >= threshold) for p, q, d in table]

    integrated = {
        "D(S) approximant": density,
        "sum_p int f_Sp(pt) / log T": int_scaled,
        "same after substitution u = pt": int_subst,
        "int f_coprime / log T": int_coprime,
        "sum_p int f_Sp / log T": big_sum,
        "sum_p (a/p) int f_Sp / log T": weighted,
        "int f_union / log T": int_union,
        "sum_{p<q} int f_(Sp & Sq) / log T": pair_sum,
    }
    unconditional["substitution identity"] = leq(int_scaled, int_subst) and leq(int_subst, int_scaled)
    unconditional["integrated union bound: sum >= D - coprime part"] = _geq(int_scaled, density - int_coprime)
    unconditional["sum_p int f_Sp >= sum_p (a/p) int f_Sp"] = _geq(big_sum, weighted)
    unconditional["int f_union / log T <= 2"] = leq(int_union, 2.0)
    unconditional["pairs >= sum_p - union (integrated inclusion-exclusion)"] = _geq(pair_sum, big_sum - int_union)
    if table:
        best = max(d for _, _, d in table)
        unconditional["max pair >= pair sum / #pairs"] = _geq(best, pair_sum / len(table))

    conditional["int-bound: sum_p int f_Sp(pt) >= D - prod"] = _geq(int_scaled, density - prod)
    conditional["int-bound: sum_p int f_Sp(pt) >= D/2"] = _geq(int_scaled, density / 2)
    conditional["big-sum with D/2: sum_p (a/p) int f_Sp >= a D / 2"] = _geq(weighted, a * density / 2)
    conditional["big-sum with D/3: sum_p (a/p) int f_Sp >= a D / 3"] = _geq(weighted, a * density / 3)
    conditional["big-sum: sum_p int f_Sp / log T >= 4"] = _geq(big_sum, 4.0)
    conditional["pair sum >= 2"] = _geq(pair_sum, 2.0)
    conditional["some pair >= 1/((b-a)(1+b-a))"] = any(hit for *_, hit in pair_table)

    hypotheses = {
        "a > 12 / D": density > 0 and a > 12.0 / density,
        "prod (1 - 1/p) <= D / 4": prod <= density / 4,
    }
    return IndStepReport(
        a, b, float(T), primes, prod, density, hypotheses, pointwise, integrated,
        unconditional, conditional, pair_table, threshold,
    )


# --------------------------------------------------------------------------
# records


def _fmt(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def format_record(P: Parallelepiped) -> str:
    elems = ",".join(_fmt(x) for x in enumerate_elements(P))
    return f"c={_fmt(P.c)}; gens={','.join(_fmt(a) for a in P.generators)}; elements={elems}"


def parse_record(line: str) -> Parallelepiped:
    fields = dict(part.strip().split("=", 1) for part in line.split(";") if part.strip())
    P = Parallelepiped(Fraction(fields["c"]), tuple(Fraction(g) for g in fields["gens"].split(",")))
    if "elements" in fields:
        listed = [Fraction(x) for x in fields["elements"].split(",")]
        if listed != enumerate_elements(P):
            raise ValueError("record elements do not match c and gens")
    return P
