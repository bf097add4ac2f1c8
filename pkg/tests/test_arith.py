import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qfcover.arith import (FundDisc, assoc_discriminant, build_sieve, factorize,
                           fundamental_discriminants, gamma_W, gamma_W_exact, gaussian_cdf,
                           is_fundamental, kronecker, kronecker_table, one_star_chi,
                           one_star_chi_table, primes_upto, tau_small)

SMALL_D = fundamental_discriminants(-500, -3)


def euler(D, p):
    if D % p == 0:
        return 0
    return 1 if pow(D % p, (p - 1) // 2, p) == 1 else -1


@pytest.mark.parametrize("D,n,want", [(-4, 1, 1), (-4, 2, 0), (-4, 5, 1), (-20, 3, 1)])
def test_kronecker_examples(D, n, want):
    assert kronecker(D, n) == want


def test_kronecker_rejects_non_discriminants():
    for D in (2, 3, -1, -2, 7):
        with pytest.raises(ValueError):
            kronecker(D, 3)


def test_kronecker_at_zero_minus_one_and_two():
    assert kronecker(1, 0) == 1
    assert kronecker(-4, 0) == 0
    assert kronecker(-7, -1) == -1 and kronecker(5, -1) == 1
    assert kronecker(-7, 2) == 1      # -7 = 1 mod 8
    assert kronecker(-3, 2) == -1     # -3 = 5 mod 8
    assert kronecker(-8, 2) == 0


def test_kronecker_matches_euler_on_odd_primes():
    for D in SMALL_D:
        for p in primes_upto(400):
            if p > 2:
                assert kronecker(D, int(p)) == euler(D, int(p)), (D, p)


@settings(max_examples=300, deadline=None)
@given(st.sampled_from(SMALL_D), st.integers(-1000, 1000), st.integers(-1000, 1000))
def test_complete_multiplicativity(D, m, n):
    assert kronecker(D, m * n) == kronecker(D, m) * kronecker(D, n)


@settings(max_examples=200, deadline=None)
@given(st.sampled_from(SMALL_D), st.integers(1, 10**6))
def test_periodicity(D, n):
    assert kronecker(D, n) == kronecker(D, n + abs(D))


def test_character_sums_vanish_and_table_agrees():
    for D in SMALL_D + [5, 8, 12, 13]:
        t = kronecker_table(D)
        assert int(t.sum()) == 0
        assert t.tolist() == [kronecker(D, n) for n in range(abs(D))]


@pytest.mark.parametrize("d,D", [(1, -4), (3, -3), (5, -20), (7, -7), (2, -8), (6, -24)])
def test_assoc_discriminant(d, D):
    fd = assoc_discriminant(d)
    assert fd.D == D and is_fundamental(fd.D)


def test_assoc_discriminant_rejects_non_squarefree():
    for d in (4, 8, 9, 12, 18):
        with pytest.raises(ValueError):
            assoc_discriminant(d)


def test_fund_disc_invariants():
    for d in range(1, 400):
        try:
            fd = assoc_discriminant(d)
        except ValueError:
            continue
        assert fd.D % 4 in (0, 1)
        assert (fd.D == -4 * d) == (d % 4 in (1, 2))
        assert (fd.D == -d) == (d % 4 == 3)
    with pytest.raises(ValueError):
        FundDisc(3, -12)


def test_build_sieve_examples():
    assert build_sieve(8).omega[1:].tolist() == [0, 1, 1, 2, 1, 2, 1, 3]
    t = build_sieve(12)
    assert t.spf[12] == 2 and t.omega[12] == 3
    assert build_sieve(1).omega[1:].tolist() == [0]


def test_sieve_vs_trial_division():
    N = 10**5
    t = build_sieve(N)
    for n in range(1, N + 1):
        m, c, p = n, 0, 2
        while p * p <= m:
            while m % p == 0:
                m //= p
                c += 1
            p += 1
        c += m > 1
        assert t.omega[n] == c
    with pytest.raises(ValueError):
        t.omega[3] = 0


@pytest.mark.parametrize("n,W,small,large,omega", [(10, 3, 2, 5, 2), (12, 3, 12, 1, 3), (1, 7, 1, 1, 0)])
def test_factorize_examples(n, W, small, large, omega):
    t = build_sieve(100)
    for f in (factorize(n, t, W), factorize(n, None, W)):
        assert (f.n_small, f.n_large, f.big_omega) == (small, large, omega)


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 50000), st.sampled_from([2, 3, 5, 7.5]))
def test_factorize_invariants(n, W):
    f = factorize(n, build_sieve_cached(), W)
    assert f.n_small * f.n_large == n
    assert math.prod(p ** e for p, e in f.prime_powers) == n
    assert f.big_omega == sum(e for _, e in f.prime_powers)
    assert all((p <= W) == (f.n_small % p == 0) for p, _ in f.prime_powers)
    assert f.tau_small == tau_small(n, W) == sum(f.n_small % k == 0 for k in range(1, f.n_small + 1))
    assert f.v2 == (n & -n).bit_length() - 1


_SIEVE = []


def build_sieve_cached():
    if not _SIEVE:
        _SIEVE.append(build_sieve(50000))
    return _SIEVE[0]


def test_factorize_out_of_range():
    with pytest.raises(ValueError):
        factorize(101, build_sieve(100))


def divisor_sum(n, D):
    return sum(kronecker(D, l) for l in range(1, n + 1) if n % l == 0)


@pytest.mark.parametrize("n,D,want", [(1, -4, 1), (5, -4, 2), (3, -4, 0)])
def test_one_star_chi_examples(n, D, want):
    assert one_star_chi(n, D) == want == divisor_sum(n, D)


def test_one_star_chi_against_divisor_enumeration():
    for d in (1, 3, 5, 7, 21, 23, 163):
        fd = assoc_discriminant(d)
        table = one_star_chi_table(fd.D, 600)
        for n in range(1, 601):
            assert one_star_chi(n, fd) == table[n] == divisor_sum(n, fd.D) >= 0


@settings(max_examples=200, deadline=None)
@given(st.sampled_from(SMALL_D), st.integers(1, 300), st.integers(1, 300))
def test_one_star_chi_multiplicative(D, m, n):
    if math.gcd(m, n) == 1:
        assert one_star_chi(m * n, D) == one_star_chi(m, D) * one_star_chi(n, D)


def test_gamma_W():
    assert gamma_W(2) == 0.5
    assert gamma_W(3) == pytest.approx(1 / 3, abs=1e-16)
    assert gamma_W_exact(5) == Fraction(4, 15)
    assert gamma_W(6.9) == gamma_W(5)
    with pytest.raises(ValueError):
        gamma_W(1.5)


def test_gaussian_cdf():
    assert gaussian_cdf(0) == 0.5
    for a in (0.5, 1, 2):
        assert gaussian_cdf(a) + gaussian_cdf(-a) == pytest.approx(1, abs=1e-15)
    assert abs(gaussian_cdf(1) - 0.8413447461) < 1e-10
    mpmath.mp.dps = 30
    for a in (-4, -2.5, -1, 0.3, 1.7, 3):
        exact = mpmath.quad(lambda x: mpmath.exp(-x * x / 2), [-mpmath.inf, a]) / mpmath.sqrt(2 * mpmath.pi)
        assert abs(gaussian_cdf(a) - float(exact)) < 1e-10
