"""Elementary arithmetic: Kronecker symbols, fundamental discriminants,
factorization sieves, the ideal-count divisor sum and a few constants."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
from numba import njit


# --------------------------------------------------------------------------
# Kronecker symbol
# --------------------------------------------------------------------------

def jacobi(a: int, m: int) -> int:
    """Jacobi symbol (a/m) for odd m > 0."""
    if m <= 0 or m % 2 == 0:
        raise ValueError(f"Jacobi symbol needs odd positive modulus, got {m}")
    a %= m
    sign = 1
    while a:
        while a % 2 == 0:
            a //= 2
            if m % 8 in (3, 5):
                sign = -sign
        a, m = m, a
        if a % 4 == 3 and m % 4 == 3:
            sign = -sign
        a %= m
    return sign if m == 1 else 0


def kronecker(D: int, n: int) -> int:
    """Kronecker symbol (D/n) for a discriminant D (D = 0, 1 mod 4)."""
    if D % 4 not in (0, 1):
        raise ValueError(f"{D} is not a discriminant (must be 0 or 1 mod 4)")
    if n == 0:
        return 1 if D == 1 else 0
    sign = 1
    if n < 0:
        n = -n
        if D < 0:
            sign = -1
    v = (n & -n).bit_length() - 1
    if v:
        if D % 2 == 0:
            return 0
        if v % 2 and D % 8 == 5:
            sign = -sign
        n >>= v
    if n == 1:
        return sign
    return sign * jacobi(D, n)


@njit(cache=True, nogil=True)
def _kronecker_nb(D, n):
    # same reduction as `kronecker`; D must already be a discriminant
    if n == 0:
        return 1 if D == 1 else 0
    sign = 1
    if n < 0:
        n = -n
        if D < 0:
            sign = -1
    while n % 2 == 0:
        if D % 2 == 0:
            return 0
        if D % 8 == 5:
            sign = -sign
        n //= 2
    if n == 1:
        return sign
    a = D % n
    m = n
    while a != 0:
        while a % 2 == 0:
            a //= 2
            r = m % 8
            if r == 3 or r == 5:
                sign = -sign
        a, m = m, a
        if a % 4 == 3 and m % 4 == 3:
            sign = -sign
        a %= m
    return sign if m == 1 else 0


@njit(cache=True)
def _kronecker_period(D, q):
    out = np.empty(q, dtype=np.int8)
    for n in range(q):
        out[n] = _kronecker_nb(D, n)
    return out


def kronecker_table(D: int, length: int | None = None) -> np.ndarray:
    """Values (D/n) for n = 0, ..., length-1 (default: one period |D|).

    Only valid as a periodic table when D is a fundamental discriminant.
    """
    if D % 4 not in (0, 1):
        raise ValueError(f"{D} is not a discriminant (must be 0 or 1 mod 4)")
    q = abs(D) if length is None else length
    return _kronecker_period(D, q)


# --------------------------------------------------------------------------
# Fundamental discriminants
# --------------------------------------------------------------------------

def is_squarefree(n: int) -> bool:
    if n == 0:
        return False
    n = abs(n)
    if n % 4 == 0:
        return False
    p = 3
    while p * p <= n:
        if n % (p * p) == 0:
            return False
        p += 2
    return True


def is_fundamental(D: int) -> bool:
    if D == 1 or D == 0:
        return False
    if D % 4 == 1:
        return is_squarefree(D)
    if D % 4 == 0:
        m = D // 4
        return m % 4 in (2, 3) and is_squarefree(m)
    return False


@dataclass(frozen=True)
class FundDisc:
    """Squarefree d > 0 together with the fundamental discriminant of Q(sqrt(-d))."""

    d: int
    D: int

    def __post_init__(self):
        if not is_fundamental(self.D):
            raise ValueError(f"{self.D} is not a fundamental discriminant")

    def chi(self, n: int) -> int:
        return kronecker(self.D, n)

    @property
    def w(self) -> int:
        return {-3: 6, -4: 4}.get(self.D, 2)


def assoc_discriminant(d: int) -> FundDisc:
    """D = -4d for d = 1, 2 (mod 4) and D = -d for d = 3 (mod 4)."""
    if d < 1 or not is_squarefree(d):
        raise ValueError(f"d={d} must be a positive squarefree integer")
    D = -d if d % 4 == 3 else -4 * d
    return FundDisc(d, D)


def fundamental_discriminants(lo: int, hi: int) -> list[int]:
    """Fundamental discriminants D with lo <= D <= hi, ascending."""
    return [D for D in range(lo, hi + 1) if is_fundamental(D)]


# --------------------------------------------------------------------------
# Sieves and factorization
# --------------------------------------------------------------------------

def primes_upto(n: int) -> np.ndarray:
    if n < 2:
        return np.zeros(0, dtype=np.int64)
    sieve = np.ones(n + 1, dtype=bool)
    sieve[:2] = False
    for p in range(2, math.isqrt(n) + 1):
        if sieve[p]:
            sieve[p * p::p] = False
    return np.flatnonzero(sieve).astype(np.int64)


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n < 4:
        return True
    if n % 2 == 0:
        return False
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


@njit(cache=True)
def _spf_omega(N):
    spf = np.zeros(N + 1, dtype=np.int32)
    r = int(math.sqrt(N))
    while (r + 1) * (r + 1) <= N:
        r += 1
    for p in range(2, r + 1):
        if spf[p] == 0:
            for m in range(p * p, N + 1, p):
                if spf[m] == 0:
                    spf[m] = p
    for n in range(2, N + 1):
        if spf[n] == 0:
            spf[n] = n
    omega = np.zeros(N + 1, dtype=np.uint8)
    for n in range(2, N + 1):
        omega[n] = omega[n // spf[n]] + 1
    return spf, omega


@dataclass(frozen=True, eq=False)
class SieveTables:
    """Smallest-prime-factor and Omega tables for 1 <= n <= limit.

    Arrays are indexed directly by n; index 0 is unused.
    """

    limit: int
    spf: np.ndarray
    omega: np.ndarray


def build_sieve(N: int) -> SieveTables:
    if N < 1:
        raise ValueError("N must be >= 1")
    try:
        spf, omega = _spf_omega(N)
    except MemoryError as exc:
        raise MemoryError(
            f"sieve tables up to N={N} need about {5 * (N + 1)} bytes") from exc
    spf.flags.writeable = False
    omega.flags.writeable = False
    return SieveTables(N, spf, omega)


@dataclass(frozen=True)
class FactoredInteger:
    n: int
    prime_powers: tuple[tuple[int, int], ...]
    big_omega: int
    v2: int
    n_small: int
    n_large: int

    @property
    def tau_small(self) -> int:
        """Number of divisors of n_small."""
        t = 1
        for p, e in self.prime_powers:
            if self.n_small % p == 0:
                t *= e + 1
        return t


def _trial_factor(n: int) -> list[tuple[int, int]]:
    out = []
    p = 2
    while p * p <= n:
        if n % p == 0:
            e = 0
            while n % p == 0:
                n //= p
                e += 1
            out.append((p, e))
        p += 1 if p == 2 else 2
    if n > 1:
        out.append((n, 1))
    return out


def _assemble(n: int, pp: list[tuple[int, int]], W: float) -> FactoredInteger:
    small = 1
    for p, e in pp:
        if p <= W:
            small *= p ** e
    v2 = pp[0][1] if pp and pp[0][0] == 2 else 0
    return FactoredInteger(n, tuple(pp), sum(e for _, e in pp), v2, small, n // small)


def factorize(n: int, tables: SieveTables | None = None, W: float = 2) -> FactoredInteger:
    """Factor n (via the spf table if given) and split it at the cutoff W."""
    if n < 1:
        raise ValueError("n must be positive")
    if tables is None:
        return _assemble(n, _trial_factor(n), W)
    if n > tables.limit:
        raise ValueError(f"n={n} exceeds sieve limit {tables.limit}")
    pp: list[tuple[int, int]] = []
    m = n
    while m > 1:
        p = int(tables.spf[m])
        e = 0
        while m % p == 0:
            m //= p
            e += 1
        pp.append((p, e))
    return _assemble(n, pp, W)


def tau_small(n: int, W: float) -> int:
    """Number of divisors of the W-smooth part of n."""
    t = 1
    for p in primes_upto(int(W)):
        e = 0
        while n % p == 0:
            n //= p
            e += 1
        t *= e + 1
    return t


# --------------------------------------------------------------------------
# (1 * chi_D)(n), gamma_W, Phi
# --------------------------------------------------------------------------

def one_star_chi(n: int, D: FundDisc | int, tables: SieveTables | None = None) -> int:
    """Number of ideals of norm n in Q(sqrt(D)): sum of chi_D over divisors of n."""
    if n < 1:
        raise ValueError("n must be positive")
    Dv = D.D if isinstance(D, FundDisc) else D
    total = 1
    for p, e in factorize(n, tables).prime_powers:
        c = kronecker(Dv, p)
        if c == 1:
            total *= e + 1
        elif c == -1:
            if e % 2:
                return 0
        # ramified primes contribute a factor 1
    return total


def one_star_chi_table(D: int, X: int) -> np.ndarray:
    """(1 * chi_D)(n) for n = 0..X (entry 0 is 0)."""
    chi = kronecker_table(D, X + 1).astype(np.int64)
    out = np.zeros(X + 1, dtype=np.int64)
    for ell in range(1, X + 1):
        if chi[ell]:
            out[ell::ell] += chi[ell]
    return out


@lru_cache(maxsize=None)
def gamma_W_exact(W: int) -> Fraction:
    g = Fraction(1)
    for p in primes_upto(int(W)):
        g *= Fraction(int(p) - 1, int(p))
    return g


def gamma_W(W: float) -> float:
    """Mertens product over primes p <= W of (1 - 1/p)."""
    if W < 2:
        raise ValueError("W must be >= 2")
    return float(gamma_W_exact(int(math.floor(W))))


def gaussian_cdf(alpha: float) -> float:
    """Standard normal distribution function."""
    if not math.isfinite(alpha):
        raise ValueError("alpha must be finite")
    return 0.5 * math.erfc(-alpha / math.sqrt(2.0))
