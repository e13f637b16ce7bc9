"""Twist sets, parallelepipeds of twists, and their certificates.

A certificate pins a base curve E, an integer c and generators a_1..a_n.
For every subset I it lists d_I = c * prod_{i in I} a_i together with a
point of infinite order on the twist of E by the squarefree kernel of d_I.
With the generators independent modulo squares, the classes of the d_I form
the coset c V of an n-dimensional subspace V, and every twist E_{cv},
v in V, has positive rank.
"""

from __future__ import annotations

import copy
import hashlib
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import __version__
from ._io import atomic_write
from .arithcore import f2_independent, primes_upto, square_class, squarefree_kernel
from .curve import (
    CurvePoint,
    OracleConfig,
    WeierstrassCurve,
    WitnessCache,
    _twist_coefficients,
    is_nontorsion,
    on_curve,
    positive_rank_oracle,
    to_short_form,
    twist_sieve,
    witness_point,
)
from .density import FiniteIntegerSet
from .parasearch import (
    GuidedPolicy,
    Parallelepiped,
    SearchExhausted,
    SearchLimits,
    brute_force_search,
    enumerate_elements,
    guided_search,
    is_strict,
    verify_in_set,
)

__all__ = [
    "SCHEMA",
    "CONGRUENT_5",
    "MissingWitness",
    "AnnotatedTwistSet",
    "Certificate",
    "squarefree_kernels",
    "compute_twist_set",
    "find_parallelepiped",
    "build_certificate",
    "verify_certificate",
    "load_certificate",
    "save_certificate",
    "write_witness_store",
]

SCHEMA = "twistpara-certificate/1"

# y^2 = x^3 - 25x has rank 1, generated by (-4, 6); its twists are the
# congruent-number curves for 5d.
CONGRUENT_5 = WeierstrassCurve(0, 0, 0, -25, 0)


class MissingWitness(LookupError):
    def __init__(self, d: int):
        super().__init__(f"no verifiable witness for d={d}")
        self.d = d


def squarefree_kernels(N: int) -> np.ndarray:
    """kernel[n] = squarefree part of n for 0 <= n <= N (kernel[0] = 0)."""
    kern = np.arange(N + 1, dtype=np.int64)
    for p in primes_upto(math.isqrt(N)):
        p2 = int(p) * int(p)
        q = p2
        while q <= N:
            kern[q::q] //= p2
            q *= p2
    return kern


@dataclass
class AnnotatedTwistSet:
    """Witness statuses per squarefree d <= N and the set they certify."""

    base: WeierstrassCurve
    N: int
    statuses: dict[int, object]
    derived: FiniteIntegerSet
    config: dict = field(default_factory=dict)

    def point_for(self, d: int) -> CurvePoint | None:
        """Stored point on the twist by the squarefree kernel of d."""
        return witness_point(self.statuses.get(squarefree_kernel(d)))

    @property
    def witnessed_classes(self) -> list[int]:
        return [d for d, s in self.statuses.items() if witness_point(s) is not None]

    @property
    def empirical_density(self) -> float:
        return len(self.derived) / self.N


def compute_twist_set(
    base: WeierstrassCurve,
    N: int,
    config: OracleConfig | None = None,
    *,
    sieve_height: int = 1000,
    threads: int = 1,
    store_path=None,
) -> AnnotatedTwistSet:
    """Witness statuses for every squarefree d <= N, extended to all d <= N.

    The witness cache is first filled by ``twist_sieve`` (skipped when
    sieve_height is 0), then ``positive_rank_oracle`` runs on each
    squarefree d.  d belongs to the derived set when its squarefree kernel
    carries a verifiable point.  With ``store_path`` the witnessed points
    are written there, including when the run is interrupted.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    config = copy.copy(config) if config is not None else OracleConfig(search_bound=0)
    if config.cache is None:
        config.cache = WitnessCache()
    if sieve_height > 0:
        config.cache.update(twist_sieve(base, sieve_height, N))

    kern = squarefree_kernels(N)
    classes = [int(d) for d in np.flatnonzero(kern == np.arange(N + 1)) if d >= 1]
    statuses: dict[int, object] = {}
    try:
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                results = pool.map(lambda d: positive_rank_oracle(base, d, config), classes, chunksize=64)
                for d, s in zip(classes, results):
                    statuses[d] = s
        else:
            for d in classes:
                statuses[d] = positive_rank_oracle(base, d, config)
    except KeyboardInterrupt:
        if store_path is not None:
            write_witness_store(store_path, base, statuses)
        raise

    good = np.zeros(N + 1, dtype=bool)
    for d, s in statuses.items():
        if witness_point(s) is not None:
            good[d] = True
    derived = FiniteIntegerSet.from_mask(good[kern])
    described = {**config.describe(), "sieve_height": sieve_height, "N": N}
    tw = AnnotatedTwistSet(base, N, statuses, derived, described)
    if store_path is not None:
        write_witness_store(store_path, base, statuses)
    return tw


def write_witness_store(path, base: WeierstrassCurve, statuses) -> None:
    """Witness points in rank-table format, so a store can be re-imported."""
    short = to_short_form(base)[0]
    lines = [
        f"# twist witnesses for base curve {base}",
        f"# points lie on y^2 = x^3 + A d^2 x + B d^3 with A={short.A}, B={short.B}",
    ]
    for d in sorted(statuses):
        P = witness_point(statuses[d])
        if P is not None:
            lines.append(f"{d}\t{P.x}\t{P.y}")
    atomic_write(path, "\n".join(lines) + "\n")


def find_parallelepiped(S: FiniteIntegerSet, n: int, finder: str = "auto", policy: GuidedPolicy | None = None):
    """Guided search, brute force, or guided with brute-force fallback.

    Returns (Parallelepiped, how) where ``how`` names the finder that
    succeeded; raises SearchExhausted when nothing is found.
    """
    if finder not in ("auto", "guided", "brute"):
        raise ValueError(f"unknown finder {finder!r}")
    if finder in ("auto", "guided"):
        try:
            P, _ = guided_search(S, n, policy=policy)
            return P, "guided"
        except SearchExhausted:
            if finder == "guided":
                raise
    found = brute_force_search(S, n, SearchLimits(max_results=1))
    if not found:
        raise SearchExhausted(n, "no strict parallelepiped in the set")
    return found[0], "brute"


# --------------------------------------------------------------------------
# certificates


def _fmt(q) -> str:
    q = Fraction(q)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


@dataclass
class CertEntry:
    mask: int
    d: int
    twist: int
    point: CurvePoint


@dataclass
class Certificate:
    curve: WeierstrassCurve
    c: int
    generators: tuple[Fraction, ...]
    entries: list[CertEntry]
    metadata: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return len(self.generators)

    def payload(self) -> dict:
        doc = {
            "schema": SCHEMA,
            "curve": {k: _fmt(v) for k, v in zip(("a1", "a2", "a3", "a4", "a6"), self.curve.coefficients)},
            "c": _fmt(self.c),
            "generators": [_fmt(a) for a in self.generators],
            "entries": {
                str(e.mask): {"d": _fmt(e.d), "twist": _fmt(e.twist), "x": _fmt(e.point.x), "y": _fmt(e.point.y)}
                for e in self.entries
            },
            "metadata": self.metadata,
        }
        doc["digest"] = _digest(doc)
        return doc

    def to_json(self) -> str:
        return json.dumps(self.payload(), indent=2, sort_keys=True) + "\n"


def _digest(doc: dict) -> str:
    body = {k: v for k, v in doc.items() if k != "digest"}
    text = json.dumps(body, sort_keys=True, separators=(",", ":"))
    return "sha256:" + hashlib.sha256(text.encode("utf-8")).hexdigest()


def build_certificate(tw: AnnotatedTwistSet, P: Parallelepiped, metadata: dict | None = None) -> Certificate:
    if not is_strict(P):
        raise ValueError("generators are dependent modulo squares")
    if not verify_in_set(P, tw.derived):
        raise ValueError("parallelepiped is not contained in the witnessed set")
    entries = []
    for mask, x in enumerate(enumerate_elements(P)):
        d = int(x)
        k = squarefree_kernel(d)
        point = tw.point_for(d)
        if point is None:
            raise MissingWitness(d)
        entries.append(CertEntry(mask, d, k, point))
    meta = {"tool": f"twistpara {__version__}", "N": tw.N, "oracle": tw.config}
    meta.update(metadata or {})
    return Certificate(tw.base, int(P.c), P.generators, entries, meta)


def _rational(v, what, problems):
    try:
        if not isinstance(v, str):
            raise ValueError
        return Fraction(v)
    except (ValueError, ZeroDivisionError):
        problems.append(f"malformed rational in {what}: {v!r}")
        return None


def verify_certificate(cert) -> list[str]:
    """Recheck a certificate from scratch; returns the violations found.

    Accepts a Certificate, a parsed JSON dict, or JSON text.  An empty list
    means the certificate is valid.
    """
    if isinstance(cert, Certificate):
        doc = cert.payload()
    elif isinstance(cert, str):
        try:
            doc = json.loads(cert)
        except json.JSONDecodeError as exc:
            return [f"not JSON: {exc}"]
    else:
        doc = cert
    problems: list[str] = []
    if not isinstance(doc, dict):
        return ["certificate is not a JSON object"]
    if doc.get("schema") != SCHEMA:
        problems.append(f"unknown schema {doc.get('schema')!r}")
    if doc.get("digest") != _digest(doc):
        problems.append("digest mismatch")

    malformed: list[str] = []
    try:
        coeffs = [_rational(doc["curve"][k], f"curve.{k}", malformed) for k in ("a1", "a2", "a3", "a4", "a6")]
        c = _rational(doc["c"], "c", malformed)
        gens = [_rational(g, "generators", malformed) for g in doc["generators"]]
        entries = doc["entries"]
        if not isinstance(entries, dict):
            raise TypeError("entries must be an object")
    except (KeyError, TypeError) as exc:
        return problems + malformed + [f"missing or malformed field: {exc}"]
    if malformed:
        return problems + malformed

    try:
        curve = WeierstrassCurve(*coeffs)
    except ValueError as exc:
        return problems + [f"bad curve: {exc}"]
    if c <= 0 or c.denominator != 1:
        problems.append(f"c={c} is not a positive integer")
    if not gens:
        return problems + ["no generators"]
    if any(a <= 0 for a in gens):
        problems.append("generators must be positive")
        return problems
    n = len(gens)

    # (ii) independence of the generators modulo squares
    gen_classes = [square_class(a) for a in gens]
    if not f2_independent(gen_classes):
        problems.append("dependent generators")

    # (i) entry set and values
    expected_keys = {str(m) for m in range(1 << n)}
    if set(entries) != expected_keys:
        problems.append(f"entry keys {sorted(entries)} differ from the 2^{n} subset masks")
    short = to_short_form(curve)[0]
    classes = []
    for key in sorted(expected_keys & set(entries), key=int):
        mask = int(key)
        e = entries[key]
        if not isinstance(e, dict):
            problems.append(f"entry {key} is not an object")
            continue
        vals = {f: _rational(e.get(f), f"entries.{key}.{f}", problems) for f in ("d", "twist", "x", "y")}
        if any(v is None for v in vals.values()):
            continue
        expect = c * math.prod((gens[i] for i in range(n) if mask >> i & 1), start=Fraction(1))
        if expect.denominator != 1:
            problems.append(f"entry {key}: c * prod a_i = {expect} is not an integer")
        if vals["d"] != expect:
            problems.append(f"entry {key}: d={vals['d']} but c * prod a_i = {expect}")
        d = vals["d"]
        if d <= 0 or d.denominator != 1:
            problems.append(f"entry {key}: d={d} is not a positive integer")
            continue
        k = squarefree_kernel(int(d))
        if vals["twist"] != k:
            problems.append(f"entry {key}: twist {vals['twist']} is not the squarefree kernel {k} of d")
            continue
        classes.append(square_class(d))
        # (iii) and (iv) the witness on the twist by k
        twist = _twist_coefficients(short, k)
        P = CurvePoint(vals["x"], vals["y"])
        if not on_curve(twist, P):
            problems.append(f"entry {key}: point not on the twist by {k}")
        elif not is_nontorsion(twist, P):
            problems.append(f"entry {key}: point is torsion on the twist by {k}")

    # (v) the d_I run over 2^n distinct classes of the coset c V
    if len(classes) == 1 << n and len(set(classes)) != 1 << n:
        problems.append("the twists do not cover 2^n distinct square classes")
    return problems


def load_certificate(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def save_certificate(path, cert: Certificate) -> None:
    atomic_write(path, cert.to_json())
