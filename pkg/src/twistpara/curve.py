"""Elliptic curves over Q with exact rational arithmetic.

Curves are long Weierstrass models y^2 + a1 xy + a3 y = x^3 + a2 x^2 + a4 x + a6.
Twists are always taken of the short model y^2 = x^3 + A x + B returned by
``to_short_form``: the twist by d is y^2 = x^3 + A d^2 x + B d^3.

Rank positivity is only ever certified by an explicit point of infinite
order.  A rational point P is of infinite order as soon as kP != O for
k = 1..12, since no rational torsion point has order above 12 (Mazur).
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from pathlib import Path

import numpy as np

from .arithcore import as_fraction, factorize, primes_upto, squarefree_kernel

__all__ = [
    "SingularCurve",
    "PointNotOnCurve",
    "NotSquarefree",
    "WeierstrassCurve",
    "ShortForm",
    "CurvePoint",
    "INFINITY",
    "CoordinateMap",
    "X0_19",
    "X0_19_CONDUCTOR",
    "discriminant",
    "to_short_form",
    "on_curve",
    "negate",
    "add",
    "scalar_mul",
    "quadratic_twist",
    "transfer_point",
    "is_nontorsion",
    "search_witness",
    "twist_sieve",
    "kronecker",
    "twist_root_number",
    "Witnessed",
    "NoneFound",
    "Imported",
    "ParityOdd",
    "witness_point",
    "WitnessCache",
    "RankTable",
    "load_rank_table",
    "OracleConfig",
    "positive_rank_oracle",
]

TORSION_CUTOFF = 12


class SingularCurve(ValueError):
    pass


class PointNotOnCurve(ValueError):
    pass


class NotSquarefree(ValueError):
    pass


def _q(v) -> Fraction:
    return as_fraction(v)


def _fmt(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


@dataclass(frozen=True)
class WeierstrassCurve:
    a1: Fraction = Fraction(0)
    a2: Fraction = Fraction(0)
    a3: Fraction = Fraction(0)
    a4: Fraction = Fraction(0)
    a6: Fraction = Fraction(0)

    def __post_init__(self):
        for name in ("a1", "a2", "a3", "a4", "a6"):
            object.__setattr__(self, name, _q(getattr(self, name)))
        if discriminant(self) == 0:
            raise SingularCurve(f"singular model {self}")

    @property
    def coefficients(self):
        return (self.a1, self.a2, self.a3, self.a4, self.a6)

    @property
    def b_invariants(self):
        a1, a2, a3, a4, a6 = self.coefficients
        b2 = a1 * a1 + 4 * a2
        b4 = 2 * a4 + a1 * a3
        b6 = a3 * a3 + 4 * a6
        b8 = a1 * a1 * a6 + 4 * a2 * a6 - a1 * a3 * a4 + a2 * a3 * a3 - a4 * a4
        return b2, b4, b6, b8

    @property
    def c_invariants(self):
        b2, b4, b6, _ = self.b_invariants
        return b2 * b2 - 24 * b4, -b2**3 + 36 * b2 * b4 - 216 * b6

    def __str__(self):
        return "[" + ",".join(_fmt(a) for a in self.coefficients) + "]"


@dataclass(frozen=True)
class ShortForm:
    """y^2 = x^3 + A x + B."""

    A: Fraction
    B: Fraction

    def __post_init__(self):
        object.__setattr__(self, "A", _q(self.A))
        object.__setattr__(self, "B", _q(self.B))
        if 4 * self.A**3 + 27 * self.B**2 == 0:
            raise SingularCurve(f"singular short model A={self.A}, B={self.B}")

    @property
    def curve(self) -> WeierstrassCurve:
        return _long_of_short(self)

    @property
    def is_integral(self) -> bool:
        return self.A.denominator == 1 and self.B.denominator == 1


@lru_cache(maxsize=4096)
def _long_of_short(s: ShortForm) -> WeierstrassCurve:
    return WeierstrassCurve(0, 0, 0, s.A, s.B)


def _as_long(curve) -> WeierstrassCurve:
    return curve.curve if isinstance(curve, ShortForm) else curve


def discriminant(curve) -> Fraction:
    """Discriminant of a long model, short model, or raw coefficient tuple.

    Raw tuples are accepted so that singular models (which the curve types
    refuse to construct) can still be evaluated.
    """
    if isinstance(curve, ShortForm):
        coeffs = (0, 0, 0, curve.A, curve.B)
    elif isinstance(curve, WeierstrassCurve):
        coeffs = curve.coefficients
    else:
        coeffs = tuple(curve)
        if len(coeffs) == 2:
            coeffs = (0, 0, 0, *coeffs)
    a1, a2, a3, a4, a6 = (_q(c) for c in coeffs)
    b2 = a1 * a1 + 4 * a2
    b4 = 2 * a4 + a1 * a3
    b6 = a3 * a3 + 4 * a6
    b8 = a1 * a1 * a6 + 4 * a2 * a6 - a1 * a3 * a4 + a2 * a3 * a3 - a4 * a4
    return -b2 * b2 * b8 - 8 * b4**3 - 27 * b6 * b6 + 9 * b2 * b4 * b6


# The standard minimal model of conductor 19; (5, 9) generates its 3-torsion.
X0_19 = WeierstrassCurve(0, 1, 1, -9, -15)
X0_19_CONDUCTOR = 19


@dataclass(frozen=True)
class CurvePoint:
    """Affine point (x, y), or the point at infinity when both are None."""

    x: Fraction | None = None
    y: Fraction | None = None

    def __post_init__(self):
        if (self.x is None) != (self.y is None):
            raise ValueError("a point needs both coordinates or neither")
        if self.x is not None:
            object.__setattr__(self, "x", _q(self.x))
            object.__setattr__(self, "y", _q(self.y))

    @property
    def is_infinity(self) -> bool:
        return self.x is None

    def __str__(self):
        return "O" if self.is_infinity else f"({_fmt(self.x)}, {_fmt(self.y)})"


INFINITY = CurvePoint()


def on_curve(curve, P: CurvePoint) -> bool:
    if P.is_infinity:
        return True
    a1, a2, a3, a4, a6 = _as_long(curve).coefficients
    x, y = P.x, P.y
    return y * y + a1 * x * y + a3 * y == x**3 + a2 * x * x + a4 * x + a6


def _check(curve, *points):
    for P in points:
        if not on_curve(curve, P):
            raise PointNotOnCurve(f"{P} is not on {_as_long(curve)}")


def negate(curve, P: CurvePoint) -> CurvePoint:
    if P.is_infinity:
        return P
    E = _as_long(curve)
    return CurvePoint(P.x, -P.y - E.a1 * P.x - E.a3)


def _add(E: WeierstrassCurve, P: CurvePoint, Q: CurvePoint) -> CurvePoint:
    if P.is_infinity:
        return Q
    if Q.is_infinity:
        return P
    a1, a2, a3, a4, a6 = E.coefficients
    x1, y1, x2, y2 = P.x, P.y, Q.x, Q.y
    if x1 == x2:
        if y1 + y2 + a1 * x2 + a3 == 0:
            return INFINITY
        den = 2 * y1 + a1 * x1 + a3
        lam = (3 * x1 * x1 + 2 * a2 * x1 + a4 - a1 * y1) / den
        nu = (-x1**3 + a4 * x1 + 2 * a6 - a3 * y1) / den
    else:
        lam = (y2 - y1) / (x2 - x1)
        nu = (y1 * x2 - y2 * x1) / (x2 - x1)
    x3 = lam * lam + a1 * lam - a2 - x1 - x2
    y3 = -(lam + a1) * x3 - nu - a3
    return CurvePoint(x3, y3)


def add(curve, P: CurvePoint, Q: CurvePoint) -> CurvePoint:
    """Chord-tangent sum of two points on ``curve``."""
    _check(curve, P, Q)
    return _add(_as_long(curve), P, Q)


def scalar_mul(curve, k: int, P: CurvePoint) -> CurvePoint:
    """k * P by double-and-add; negative k multiplies -P."""
    _check(curve, P)
    E = _as_long(curve)
    if k < 0:
        k, P = -k, negate(E, P)
    out = INFINITY
    for bit in bin(k)[2:] if k else "":
        out = _add(E, out, out)
        if bit == "1":
            out = _add(E, out, P)
    return out


# --------------------------------------------------------------------------
# short form


@dataclass(frozen=True)
class CoordinateMap:
    """Isomorphism from a long model onto its short model.

    forward:  x' = u^2 (x - r),  y' = u^3 (y - s x - t)
    inverse:  x = x'/u^2 + r,    y = y'/u^3 + s x + t
    """

    u: Fraction = Fraction(1)
    r: Fraction = Fraction(0)
    s: Fraction = Fraction(0)
    t: Fraction = Fraction(0)

    def forward(self, P: CurvePoint) -> CurvePoint:
        if P.is_infinity:
            return P
        u = self.u
        return CurvePoint(u * u * (P.x - self.r), u**3 * (P.y - self.s * P.x - self.t))

    def inverse(self, P: CurvePoint) -> CurvePoint:
        if P.is_infinity:
            return P
        u = self.u
        x = P.x / (u * u) + self.r
        return CurvePoint(x, P.y / u**3 + self.s * x + self.t)

    @property
    def is_identity(self) -> bool:
        return self.u == 1 and self.r == 0 and self.s == 0 and self.t == 0


def _valuation(q: Fraction, p: int) -> float:
    if q == 0:
        return math.inf
    v, n, d = 0, q.numerator, q.denominator
    while n % p == 0:
        n //= p
        v += 1
    while d % p == 0:
        d //= p
        v -= 1
    return v


@lru_cache(maxsize=256)
def to_short_form(curve: WeierstrassCurve) -> tuple[ShortForm, CoordinateMap]:
    """Complete the square and cube, then clear denominators.

    The scale u is the smallest positive integer with u^4 A and u^6 B
    integral, so integral short inputs come back unchanged.
    """
    c4, c6 = curve.c_invariants
    A0, B0 = -c4 / 48, -c6 / 864
    u = 1
    den_primes = {p for q in (A0, B0) for p, _ in factorize(q.denominator)}
    for p in sorted(den_primes):
        e = max(
            math.ceil(-_valuation(A0, p) / 4) if A0 else 0,
            math.ceil(-_valuation(B0, p) / 6) if B0 else 0,
            0,
        )
        u *= p**e
    b2 = curve.b_invariants[0]
    cmap = CoordinateMap(Fraction(u), -b2 / 12, -curve.a1 / 2, -curve.a3 / 2)
    return ShortForm(A0 * u**4, B0 * u**6), cmap


# --------------------------------------------------------------------------
# twists


def _twist_coefficients(short: ShortForm, d: int) -> ShortForm:
    return ShortForm(short.A * d * d, short.B * d**3)


def quadratic_twist(short: ShortForm, d: int) -> ShortForm:
    """y^2 = x^3 + A d^2 x + B d^3 for squarefree d != 0."""
    d = int(d)
    if d == 0:
        raise ValueError("cannot twist by 0")
    if squarefree_kernel(d) != abs(d):
        raise NotSquarefree(f"{d} has a square factor")
    return _twist_coefficients(short, d)


def transfer_point(P: CurvePoint, m: int) -> CurvePoint:
    """Carry a point from the twist by d to the twist by d*m^2."""
    if P.is_infinity:
        return P
    return CurvePoint(P.x * m * m, P.y * m**3)


def is_nontorsion(curve, P: CurvePoint) -> bool:
    """True iff kP != O for 1 <= k <= 12, which forces infinite order."""
    _check(curve, P)
    E = _as_long(curve)
    Q = P
    for _ in range(TORSION_CUTOFF):
        if Q.is_infinity:
            return False
        Q = _add(E, Q, P)
    return True


# --------------------------------------------------------------------------
# witness search


def _square_hits(values: np.ndarray) -> np.ndarray:
    """Boolean mask of entries that are perfect squares (exact for int64)."""
    ok = values >= 0
    root = np.floor(np.sqrt(np.where(ok, values, 0).astype(np.float64))).astype(np.int64)
    hit = np.zeros(values.shape, dtype=bool)
    for delta in (-1, 0, 1):
        r = root + delta
        hit |= ok & (r >= 0) & (r * r == values)
    return hit


def _cubic_values(coeffs, u, w, bound: int, times=None):
    """(c3 u^3 + c2 u^2 w + c1 u w^2 + c0 w^3) * times, overflow-safe.

    ``bound`` must dominate |u| and |w|, and |times| <= bound.
    """
    c3, c2, c1, c0 = coeffs
    worst = bound ** (3 if times is None else 4) * sum(abs(c) for c in coeffs)
    if worst >= 2**62:
        u, w = u.astype(object), w.astype(object)
        times = None if times is None else times.astype(object)
    out = c3 * u**3 + c2 * u * u * w + c1 * u * w * w + c0 * w**3
    return out if times is None else out * times


def search_witness(short: ShortForm, bound: int):
    """Look for a non-torsion point of naive height at most ``bound``.

    Candidates are x = m/e^2 with gcd(m, e) = 1, |m| <= bound and
    e^3 <= bound, visited in increasing order of max(|m|, e^3), then e,
    then m.  Because bound only truncates that order, a witness found at
    one bound is found again at any larger bound.  Returns Witnessed with
    the first non-torsion point (taking y > 0), else NoneFound(bound).
    """
    bound = int(bound)
    if bound < 1:
        raise ValueError("bound must be >= 1")
    if not short.is_integral:
        s, cmap = to_short_form(short.curve)
        status = search_witness(s, bound)
        if isinstance(status, Witnessed):
            return Witnessed(cmap.inverse(status.point))
        return status
    A, B = int(short.A), int(short.B)
    emax = int(round(bound ** (1 / 3)))
    while emax**3 > bound:
        emax -= 1
    while (emax + 1) ** 3 <= bound:
        emax += 1
    m_all = np.arange(-bound, bound + 1, dtype=np.int64)
    hits = []
    for e in range(1, emax + 1):
        m = m_all[np.gcd(m_all, e) == 1] if e > 1 else m_all
        e_arr = np.full(m.shape, e, dtype=np.int64)
        # e^6 (x^3 + A x + B) = m^3 + A m e^4 + B e^6
        vals = _cubic_values((1, 0, A, B), m, e_arr * e_arr, max(bound, e * e))
        if vals.dtype == object:
            sq = [v >= 0 and math.isqrt(v) ** 2 == v for v in vals]
            idx = np.flatnonzero(sq)
        else:
            idx = np.flatnonzero(_square_hits(vals))
        for i in idx:
            mi = int(m[i])
            hits.append((max(abs(mi), e**3), e, mi, int(vals[i])))
    hits.sort()
    for _, e, mi, v in hits:
        P = CurvePoint(Fraction(mi, e * e), Fraction(math.isqrt(v), e**3))
        if is_nontorsion(short, P):
            return Witnessed(P)
    return NoneFound(bound)


def _strip_small_primes(V: np.ndarray, plimit: int):
    """Split positive V as kernel * rest, removing every prime < plimit."""
    kernel = np.ones(V.shape, dtype=V.dtype)
    rest = V.copy()
    for p in primes_upto(plimit - 1):
        p = int(p)
        e = np.zeros(V.shape, dtype=np.int64)
        m = rest % p == 0
        while m.any():
            rest[m] //= p
            e[m] += 1
            m[m] = rest[m] % p == 0
        kernel[(e & 1) == 1] *= p
    return kernel, rest


def twist_sieve(base: WeierstrassCurve, height: int, N: int, prime_limit: int = 1000):
    """Find twist witnesses for many d at once from small points of the base.

    Every x = u/w on the base model with |u|, w <= height and gcd(u, w) = 1
    gives a point on the twist by d = squarefree part of g(x), where
    g = (2y + a1 x + a3)^2 = 4x^3 + b2 x^2 + 2b4 x + b6.  The squarefree
    part is found by stripping primes below ``prime_limit``; leftovers that
    are squares or single primes <= N are resolved, anything else skipped.

    Returns {d: point on quadratic_twist(short, d)} for squarefree
    1 <= d <= N, keeping the first non-torsion point in order of
    (max(|u|, w), w, u).
    """
    short, cmap = to_short_form(base)
    b2, b4, b6, _ = base.b_invariants
    g = (Fraction(4), b2, 2 * b4, b6)
    L = math.lcm(*(c.denominator for c in g))
    coeffs = tuple(int(c * L * L) for c in g)
    plimit = max(prime_limit, math.isqrt(N) + 2)

    us, ws = [], []
    u_all = np.arange(-height, height + 1, dtype=np.int64)
    for w in range(1, height + 1):
        u = u_all[np.gcd(u_all, w) == 1] if w > 1 else u_all
        us.append(u)
        ws.append(np.full(u.shape, w, dtype=np.int64))
    u = np.concatenate(us)
    w = np.concatenate(ws)
    V = _cubic_values(coeffs, u, w, height, times=w)
    keep = V > 0
    u, w, V = u[keep], w[keep], V[keep]
    if V.dtype == object:
        # huge models: resolve exactly in Python
        kernel = np.array([squarefree_kernel(int(v)) for v in V], dtype=object)
        d = np.where(kernel <= N, kernel, 0)
    else:
        kernel, rest = _strip_small_primes(V, plimit)
        square = _square_hits(rest)
        small = ~square & (rest <= N // kernel)
        d = np.where(square, kernel, np.where(small, kernel * rest, 0))
    pick = np.flatnonzero((d > 0) & (d <= N))
    order = sorted(pick, key=lambda i: (max(abs(int(u[i])), int(w[i])), int(w[i]), int(u[i])))

    found: dict[int, CurvePoint] = {}
    for i in order:
        di = int(d[i])
        if di in found:
            continue
        ui, wi, vi = int(u[i]), int(w[i]), int(V[i])
        s = math.isqrt(vi // di)
        x = Fraction(ui, wi)
        Y = Fraction(s, L * wi * wi)  # d*Y^2 = g(x)
        xs = cmap.u**2 * (x - cmap.r)
        P = CurvePoint(di * xs, di * di * cmap.u**3 * Y / 2)
        twist = _twist_coefficients(short, di)
        if is_nontorsion(twist, P):
            found[di] = P
    return dict(sorted(found.items()))


# --------------------------------------------------------------------------
# parity heuristic


def kronecker(a: int, n: int) -> int:
    """Kronecker symbol (a | n)."""
    if n == 0:
        return 1 if abs(a) == 1 else 0
    result = 1
    if n < 0:
        n = -n
        if a < 0:
            result = -result
    v = 0
    while n % 2 == 0:
        n //= 2
        v += 1
    if v:
        if a % 2 == 0:
            return 0
        if v % 2 and a % 8 in (3, 5):
            result = -result
    a %= n
    while a:
        while a % 2 == 0:
            a //= 2
            if n % 8 in (3, 5):
                result = -result
        a, n = n, a
        if a % 4 == 3 and n % 4 == 3:
            result = -result
        a %= n
    return result if n == 1 else 0


def twist_root_number(d: int, conductor: int, root_number: int = 1) -> int | None:
    """Predicted root number of the twist by squarefree d.

    Uses w(E_D) = w(E) * chi_D(-N) for the fundamental discriminant D of
    Q(sqrt d); only defined here for d coprime to 2N, else None.
    """
    if math.gcd(d, 2 * conductor) != 1:
        return None
    D = d if d % 4 == 1 else 4 * d
    return root_number * kronecker(D, -conductor)


# --------------------------------------------------------------------------
# witness statuses


@dataclass(frozen=True)
class Witnessed:
    point: CurvePoint


@dataclass(frozen=True)
class NoneFound:
    bound: int


@dataclass(frozen=True)
class Imported:
    """Table entry; advisory only when no point came with it."""

    source: str
    point: CurvePoint | None = None


@dataclass(frozen=True)
class ParityOdd:
    """Root number predicts odd rank; never enough for a certificate."""


def witness_point(status) -> CurvePoint | None:
    """The verifiable point carried by a status, if any."""
    if isinstance(status, (Witnessed, Imported)):
        return status.point
    return None


class WitnessCache:
    """Thread-safe {squarefree d: point on the twist by d}."""

    def __init__(self, entries=None):
        self._lock = threading.Lock()
        self._data: dict[int, CurvePoint] = dict(entries or {})

    def get(self, d: int) -> CurvePoint | None:
        with self._lock:
            return self._data.get(d)

    def put(self, d: int, point: CurvePoint) -> None:
        with self._lock:
            self._data[d] = point

    def update(self, entries) -> None:
        with self._lock:
            self._data.update(entries)

    def items(self):
        with self._lock:
            return sorted(self._data.items())

    def __contains__(self, d):
        with self._lock:
            return d in self._data

    def __len__(self):
        with self._lock:
            return len(self._data)


@dataclass
class RankTable:
    source: str
    entries: dict[int, CurvePoint | None] = field(default_factory=dict)


def load_rank_table(path, base: WeierstrassCurve | None = None) -> RankTable:
    """Read ``d<TAB>x<TAB>y`` / ``d<TAB>?`` lines.

    Points live on the twist by squarefree d of the short model of the base.
    When ``base`` is given every point is re-verified on load.
    """
    path = Path(path)
    table = RankTable(source=path.name)
    short = to_short_form(base)[0] if base is not None else None
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        d = int(parts[0])
        if d < 1 or squarefree_kernel(d) != d:
            raise ValueError(f"{path}:{lineno}: d={d} is not a positive squarefree integer")
        if parts[1:] == ["?"]:
            table.entries[d] = None
            continue
        if len(parts) != 3:
            raise ValueError(f"{path}:{lineno}: expected d, x, y")
        P = CurvePoint(Fraction(parts[1]), Fraction(parts[2]))
        if short is not None:
            twist = _twist_coefficients(short, d)
            if not on_curve(twist, P) or not is_nontorsion(twist, P):
                raise ValueError(f"{path}:{lineno}: point {P} does not witness d={d}")
        table.entries[d] = P
    return table


@dataclass
class OracleConfig:
    """Knobs for ``positive_rank_oracle``.

    search_bound: naive height for the per-twist search (0 disables it).
    parity_filter: skip the search on twists whose root number predicts
        even rank, and flag odd-parity misses as ParityOdd.
    """

    search_bound: int = 10**4
    table: RankTable | None = None
    cache: WitnessCache | None = None
    parity_filter: bool = False
    conductor: int | None = None
    root_number: int = 1

    def describe(self) -> dict:
        return {
            "search_bound": self.search_bound,
            "table": self.table.source if self.table else None,
            "parity_filter": self.parity_filter,
            "conductor": self.conductor,
            "root_number": self.root_number,
        }


def _status_for_class(base, k: int, config: OracleConfig):
    short = to_short_form(base)[0]
    twist = _twist_coefficients(short, k)
    if config.table is not None and k in config.table.entries:
        P = config.table.entries[k]
        if P is not None and not (on_curve(twist, P) and is_nontorsion(twist, P)):
            raise PointNotOnCurve(f"table point {P} does not witness d={k}")
        return Imported(config.table.source, P)
    if config.cache is not None:
        P = config.cache.get(k)
        if P is not None:
            return Witnessed(P)
    parity = None
    if config.parity_filter and config.conductor:
        parity = twist_root_number(k, config.conductor, config.root_number)
        if parity == 1:
            return NoneFound(0)
    if config.search_bound < 1:
        return ParityOdd() if parity == -1 else NoneFound(0)
    status = search_witness(twist, config.search_bound)
    if isinstance(status, Witnessed):
        if config.cache is not None:
            config.cache.put(k, status.point)
        return status
    return ParityOdd() if parity == -1 else status


def positive_rank_oracle(base: WeierstrassCurve, d: int, config: OracleConfig | None = None):
    """Evidence that the twist of ``base`` by d has positive rank.

    d is reduced to its squarefree kernel k = d / m^2; the table, then the
    cache, then a naive search are consulted for k, and any point found is
    carried to the twist by d through (x, y) -> (m^2 x, m^3 y).
    """
    if d < 1:
        raise ValueError("d must be a positive integer")
    config = config or OracleConfig()
    k = squarefree_kernel(d)
    m = math.isqrt(d // k)
    status = _status_for_class(base, k, config)
    if m == 1:
        return status
    if isinstance(status, Witnessed):
        return Witnessed(transfer_point(status.point, m))
    if isinstance(status, Imported) and status.point is not None:
        return Imported(status.source, transfer_point(status.point, m))
    return status
