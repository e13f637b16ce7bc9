import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad

from twistpara.arithcore import InvalidRange
from twistpara.density import (
    FiniteIntegerSet,
    InvalidT,
    InvalidWindow,
    NonpositiveT,
    bonferroni_check,
    coprime_filter,
    divide_set,
    f_value,
    leq,
    log_integral,
    lower_density_estimate,
    read_set_file,
    sieve_bound_check,
    smoothed_density,
    upper_bound_check,
    write_set_file,
)

subsets = st.sets(st.integers(min_value=1, max_value=400), max_size=120).map(lambda s: FiniteIntegerSet(s, 400))
times = st.floats(min_value=1e-3, max_value=3.0)


def test_set_basics():
    S = FiniteIntegerSet([5, 1, 3, 3], 10)
    assert list(S) == [1, 3, 5] and len(S) == 3 and S.min() == 1
    assert 3 in S and 4 not in S
    assert S.mask().sum() == 3
    assert FiniteIntegerSet.from_mask(S.mask()) == S
    with pytest.raises(ValueError):
        FiniteIntegerSet([0, 1])
    with pytest.raises(ValueError):
        FiniteIntegerSet([11], 10)


@given(subsets, times)
def test_f_value_against_direct_sum(S, t):
    direct = sum(math.exp(-n * t) for n in S)
    assert math.isclose(f_value(S, t), direct, rel_tol=1e-12, abs_tol=1e-300)


@given(subsets, times)
def test_f_dominated_by_upper_bound(S, t):
    assert leq(f_value(S, t), upper_bound_check(t))


def test_nonpositive_t_rejected():
    S = FiniteIntegerSet.interval(1, 5)
    with pytest.raises(NonpositiveT):
        f_value(S, 0)
    with pytest.raises(InvalidT):
        smoothed_density(S, 1.0)


@pytest.mark.parametrize("T", [10.0, 1e3])
def test_log_integral_against_quadrature(T):
    S = FiniteIntegerSet([1, 2, 7, 30, 31, 90], 100)
    val, _ = quad(lambda t: f_value(S, t), 1.0 / T, 1.0, epsabs=0, epsrel=1e-12, limit=200)
    assert math.isclose(log_integral(S, T), val, rel_tol=1e-10)


def test_full_interval_density_tends_to_one():
    rep = smoothed_density(FiniteIntegerSet.interval(1, 10**6), 1e4)
    assert 0.85 < rep.value < 1.0
    assert rep.truncation_error_bound < 1e-20


def test_truncation_bound_dominates_tail():
    # elements beyond N of the full interval must add at most the bound
    T = 200.0
    small = smoothed_density(FiniteIntegerSet.interval(1, 500), T)
    big = smoothed_density(FiniteIntegerSet.interval(1, 20000), T)
    assert 0 <= big.value - small.value <= small.truncation_error_bound


def test_lower_density_of_even_numbers():
    evens = FiniteIntegerSet(range(2, 101, 2), 100)
    # the minimum of |S & [1,n]|/n over 10 <= n <= 100 sits at n = 11
    assert lower_density_estimate(evens, 10) == pytest.approx(5 / 11)
    assert lower_density_estimate(evens, 100) == pytest.approx(0.5)
    with pytest.raises(InvalidWindow):
        lower_density_estimate(evens, 101)


@given(subsets, st.integers(min_value=1, max_value=12))
def test_divide_and_filter(S, m):
    D = divide_set(S, m)
    assert set(D) == {n // m for n in S if n % m == 0}
    assert D.universe_bound == max(400 // m, 1)
    C = coprime_filter(S, m)
    assert set(C) == {n for n in S if math.gcd(n, m) == 1}


def test_scaled_set():
    S = FiniteIntegerSet([1, 4], 5)
    assert list(S.scaled(3)) == [3, 12] and S.scaled(3).universe_bound == 15


@given(st.lists(subsets, min_size=1, max_size=5), times)
def test_bonferroni_inequalities(sets, t):
    chk = bonferroni_check(sets, t)
    assert chk.upper_holds and chk.lower_holds


@given(subsets, st.integers(2, 30), st.integers(0, 20), times)
def test_corrected_sieve_bound_always_holds(S, a, width, t):
    chk = sieve_bound_check(S, a, a + width, t)
    assert chk.corrected_holds


def test_stated_sieve_bound_fails_on_full_interval():
    # at small t the coprime residues overshoot prod(1 - 1/p) / t by about
    # phi(P)/2, so the stated bound is not a valid inequality
    chk = sieve_bound_check(FiniteIntegerSet.interval(1, 10**4), 2, 10, 0.01)
    assert chk.lhs == pytest.approx(22.8876, abs=1e-4)
    assert chk.rhs == pytest.approx(22.8571, abs=1e-4)
    assert not chk.holds and chk.corrected_holds


def test_stated_sieve_bound_fails_at_t_one_when_one_is_in_s():
    chk = sieve_bound_check(FiniteIntegerSet([1], 1), 2, 7, 1.0)
    assert chk.lhs == pytest.approx(math.exp(-1))
    assert not chk.holds


def test_sieve_bound_range_checks():
    S = FiniteIntegerSet.interval(1, 10)
    with pytest.raises(InvalidRange):
        sieve_bound_check(S, 5, 3, 0.1)
    with pytest.raises(InvalidRange):
        sieve_bound_check(S, 1, 3, 0.1)


def test_set_file_roundtrip(tmp_path):
    S = FiniteIntegerSet([2, 3, 10], 50)
    path = tmp_path / "s.txt"
    write_set_file(path, S, header="made in a test\nsecond line")
    text = path.read_text()
    assert text.startswith("# made in a test\n# second line\nN=50\n")
    assert read_set_file(path) == S


def test_leq_tolerance():
    assert leq(1.0 + 5e-10, 1.0)
    assert not leq(1.0 + 1e-8, 1.0)
    assert leq(1e12 + 100, 1e12)


def test_fsum_makes_density_order_independent():
    rng = np.random.default_rng(3)
    elems = rng.choice(np.arange(1, 10**5), size=5000, replace=False)
    a = smoothed_density(FiniteIntegerSet(elems, 10**5), 500.0).value
    b = smoothed_density(FiniteIntegerSet(elems[::-1], 10**5), 500.0).value
    assert a == b
