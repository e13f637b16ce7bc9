import itertools
import math
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from twistpara.arithcore import (
    BudgetExceeded,
    ClassMatrix,
    InvalidRange,
    SquareClass,
    f2_independent,
    factorize,
    find_dependency,
    is_prime,
    primes_upto,
    primorial_range,
    square_class,
    squarefree_kernel,
)


def naive_is_prime(n):
    return n >= 2 and all(n % k for k in range(2, math.isqrt(n) + 1))


def test_primes_upto_matches_trial_division():
    assert list(primes_upto(200)) == [n for n in range(201) if naive_is_prime(n)]
    assert len(primes_upto(10**5)) == 9592
    assert list(primes_upto(1)) == []


def test_is_prime_agrees_with_sieve():
    flags = set(int(p) for p in primes_upto(20000))
    assert all(is_prime(n) == (n in flags) for n in range(20001))
    assert is_prime(2**61 - 1)
    assert not is_prime(3215031751)  # strong pseudoprime to bases 2, 3, 5, 7


@given(st.integers(min_value=1, max_value=10**12))
def test_factorization_multiplies_back(n):
    f = factorize(n)
    assert f.value == n
    ps = [p for p, _ in f]
    assert ps == sorted(set(ps))
    assert all(is_prime(p) for p in ps)


def test_rho_stage_splits_large_semiprime():
    f = factorize(1000000007 * 1000000009)
    assert f.factors == ((1000000007, 1), (1000000009, 1))
    assert factorize(1000003**2 * 7).factors == ((7, 1), (1000003, 2))


def test_budget_exceeded_names_cofactor():
    with pytest.raises(BudgetExceeded) as info:
        factorize(1000003 * 1000033, trial_bound=10, rho_iterations=1)
    assert info.value.cofactor == 1000003 * 1000033


@given(st.integers(min_value=1, max_value=10**6))
def test_squarefree_kernel_against_naive(n):
    k = 1
    m = n
    for p in range(2, n + 1):
        if p * p > m:
            break
        e = 0
        while m % p == 0:
            m //= p
            e += 1
        if e % 2:
            k *= p
    k *= m
    assert squarefree_kernel(n) == k


@given(
    st.fractions(min_value=-1000, max_value=1000).filter(lambda q: q != 0),
    st.integers(min_value=1, max_value=500),
    st.integers(min_value=1, max_value=500),
)
def test_square_class_ignores_squares(q, a, b):
    assert square_class(q) == square_class(q * Fraction(a, b) ** 2)


@given(
    st.fractions(min_value=-500, max_value=500).filter(lambda q: q != 0),
    st.fractions(min_value=-500, max_value=500).filter(lambda q: q != 0),
)
def test_square_class_is_multiplicative(p, q):
    assert square_class(p) * square_class(q) == square_class(p * q)


def test_square_class_representative():
    c = square_class(Fraction(-12, 5))
    assert c == SquareClass(-1, (3, 5))
    assert c.representative == -15
    assert square_class(Fraction(9, 4)).is_trivial
    with pytest.raises(ValueError):
        square_class(0)


def is_square_int(n):
    return n > 0 and math.isqrt(n) ** 2 == n


def has_square_subproduct(values):
    for r in range(1, len(values) + 1):
        for sub in itertools.combinations(values, r):
            q = math.prod(sub, start=Fraction(1))
            if q > 0 and is_square_int(q.numerator) and is_square_int(q.denominator):
                return True
    return False


small_rationals = st.fractions(min_value=Fraction(1, 40), max_value=40, max_denominator=40).filter(lambda q: q != 0)


@given(st.lists(small_rationals, min_size=1, max_size=6))
def test_dependency_search_against_subset_products(values):
    classes = [square_class(v) for v in values]
    dep = find_dependency(classes)
    assert (dep is None) == (not has_square_subproduct(values))
    if dep is not None:
        q = math.prod((values[i] for i in dep), start=Fraction(1))
        assert square_class(q).is_trivial
    assert f2_independent(classes) == (dep is None)


def test_dependency_order_is_deterministic():
    classes = [square_class(q) for q in (2, 3, 6, 5)]
    assert find_dependency(classes) == (0, 1, 2)
    assert ClassMatrix(classes).rank() == 3
    assert ClassMatrix([square_class(-1), square_class(-4)]).kernel_vector() == (0, 1)


def test_primorial_range():
    assert primorial_range(2, 10) == 210
    assert primorial_range(11, 12) == 11
    assert primorial_range(14, 16) == 1
    with pytest.raises(InvalidRange):
        primorial_range(10, 2)
