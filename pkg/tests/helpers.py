"""Independent constructions shared by unit and acceptance tests."""

import itertools
import math
import random
from fractions import Fraction

from twistpara.arithcore import squarefree_kernel
from twistpara.curve import CurvePoint, WeierstrassCurve, discriminant


def solve3(M, v):
    """Gaussian elimination over Q for a 3x3 system; None if singular."""
    A = [list(map(Fraction, row)) + [Fraction(b)] for row, b in zip(M, v)]
    for col in range(3):
        piv = next((r for r in range(col, 3) if A[r][col] != 0), None)
        if piv is None:
            return None
        A[col], A[piv] = A[piv], A[col]
        for r in range(3):
            if r != col and A[r][col] != 0:
                f = A[r][col] / A[col][col]
                A[r] = [x - f * y for x, y in zip(A[r], A[col])]
    return [A[i][3] / A[i][i] for i in range(3)]


def random_curve_through_points(rng: random.Random, span=6):
    """A nonsingular long-form curve through three random rational points.

    a1, a2 are drawn at random and (a3, a4, a6) solve the linear system
    a3 y - a4 x - a6 = x^3 + a2 x^2 - y^2 - a1 x y at each point.
    """
    while True:
        a1, a2 = rng.randint(-3, 3), rng.randint(-3, 3)
        pts = [
            (Fraction(rng.randint(-span, span), rng.randint(1, 3)), Fraction(rng.randint(-span, span), rng.randint(1, 3)))
            for _ in range(3)
        ]
        if len({x for x, _ in pts}) < 3:
            continue
        M = [(y, -x, -1) for x, y in pts]
        v = [x**3 + a2 * x**2 - y**2 - a1 * x * y for x, y in pts]
        sol = solve3(M, v)
        if sol is None:
            continue
        a3, a4, a6 = sol
        if discriminant((a1, a2, a3, a4, a6)) == 0:
            continue
        return WeierstrassCurve(a1, a2, a3, a4, a6), [CurvePoint(x, y) for x, y in pts]


def parallelepipeds_n2_oracle(S):
    """Every strict 2-parallelepiped in S by direct enumeration.

    Returns canonical keys (c, (a, b)) with c the least element, a < b.
    Independence is checked as: a, b and ab are all non-squares.
    """

    def nonsquare(q):
        return not (math.isqrt(q.numerator) ** 2 == q.numerator and math.isqrt(q.denominator) ** 2 == q.denominator)

    elems = sorted(S)
    members = set(elems)
    out = set()
    for i, w in enumerate(elems):
        for j in range(i + 1, len(elems)):
            x = elems[j]
            for y in elems[j + 1 :]:
                if (x * y) % w or (x * y) // w not in members:
                    continue
                a, b = Fraction(x, w), Fraction(y, w)
                if nonsquare(a) and nonsquare(b) and nonsquare(a * b):
                    out.add((Fraction(w), (a, b)))
    return out


def kernel_table(N):
    return {n: squarefree_kernel(n) for n in range(1, N + 1)}


def leaf_paths(doc, prefix=()):
    """Paths to every scalar inside nested dicts and lists."""
    if isinstance(doc, dict):
        for k, v in doc.items():
            yield from leaf_paths(v, prefix + (k,))
    elif isinstance(doc, list):
        for i, v in enumerate(doc):
            yield from leaf_paths(v, prefix + (i,))
    else:
        yield prefix


def mutate_leaf(doc, path):
    """Deep copy of doc with the scalar at ``path`` changed."""
    import copy

    out = copy.deepcopy(doc)
    node = out
    for k in path[:-1]:
        node = node[k]
    v = node[path[-1]]
    if isinstance(v, bool):
        new = not v
    elif isinstance(v, (int, float)):
        new = v + 1
    elif v is None:
        new = "mutated"
    else:
        try:
            new = str(Fraction(v) + 1)
        except (ValueError, ZeroDivisionError):
            new = v + "x"
    node[path[-1]] = new
    return out
