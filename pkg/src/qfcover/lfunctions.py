"""L(1, chi) for quadratic Kronecker characters with a rigorous tail bound.

The tail beyond M is bounded by partial summation against the explicit
Polya-Vinogradov estimate |sum_{a<n<=b} chi(n)| <= sqrt(q) log q + sqrt(q),
giving 2 (sqrt(q) log q + sqrt(q)) / M.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .arith import FundDisc, is_fundamental, is_prime, kronecker_table
from .classgroup import build_class_group, genus_characters, r_table

MAX_TERMS = 10**8


@dataclass(frozen=True)
class LEstimate:
    disc: int
    q: int
    value: float
    M: int
    tail_bound: float

    @property
    def interval(self) -> tuple[float, float]:
        return self.value - self.tail_bound, self.value + self.tail_bound


@njit(cache=True, nogil=True)
def _partial_l1(table, M):
    # ascending n, Neumaier-compensated
    q = table.shape[0]
    s = 0.0
    comp = 0.0
    r = 0
    for n in range(1, M + 1):
        r += 1
        if r == q:
            r = 0
        c = table[r]
        if c == 0:
            continue
        t = c / n
        u = s + t
        if abs(s) >= abs(t):
            comp += (s - u) + t
        else:
            comp += (t - u) + s
        s = u
    return s + comp


def pv_constant(q: int) -> float:
    return math.sqrt(q) * math.log(q) + math.sqrt(q)


def tail_bound(q: int, M: int) -> float:
    return 2.0 * pv_constant(q) / M


def l1_truncated(disc: int, M: int, table: np.ndarray | None = None) -> LEstimate:
    """Truncated L(1, chi_disc) = sum_{n <= M} chi(n)/n with certified tail."""
    if not is_fundamental(disc):
        raise ValueError(f"{disc} is not a fundamental discriminant")
    q = abs(disc)
    if M < q:
        raise ValueError(f"M={M} below one period q={q}: tail bound invalid")
    if table is None:
        table = kronecker_table(disc)
    value = float(_partial_l1(table, int(M)))
    return LEstimate(disc, q, value, int(M), tail_bound(q, M))


def l1_to_tolerance(disc: int, tol: float, M0: int | None = None,
                    max_terms: int = MAX_TERMS) -> tuple[LEstimate, bool]:
    """Double M from M0 until tail_bound <= tol; flag False if the cap is hit."""
    q = abs(disc)
    table = kronecker_table(disc)
    M = max(q, M0 or q)
    while True:
        est = l1_truncated(disc, M, table)
        if est.tail_bound <= tol:
            return est, True
        if M >= max_terms:
            return est, False
        M = min(2 * M, max_terms)


def unit_count(D: int) -> int:
    return {-3: 6, -4: 4}.get(D, 2)


def h_from_formula(D: int, est: LEstimate) -> tuple[int, bool]:
    """Class number from w sqrt|D| L(1, chi_D) / (2 pi), plus certification flag."""
    if est.disc != D:
        raise ValueError("estimate was built for a different discriminant")
    if D >= 0:
        raise ValueError("needs a negative discriminant")
    scale = unit_count(D) * math.sqrt(-D) / (2 * math.pi)
    lo, hi = (scale * v for v in est.interval)
    h = round(scale * est.value)
    certified = (hi - lo) < 0.5 and lo <= h <= hi
    return h, certified


def certified_class_number(D: int, max_terms: int = MAX_TERMS) -> tuple[int, bool, LEstimate]:
    """Raise M by doubling until h_from_formula certifies (or the cap is hit)."""
    q = -D
    table = kronecker_table(D)
    # half-width w q (log q + 1)/(pi M) < 1/4 needs roughly this M
    M = max(q, int(4 * unit_count(D) * q * (math.log(q) + 1) / math.pi) + 1)
    while True:
        est = l1_truncated(D, min(M, max_terms), table)
        h, ok = h_from_formula(D, est)
        if ok or M >= max_terms:
            return h, ok, est
        M *= 2


def exact_char_sum_range(disc: int) -> int:
    """max over a < b of |sum_{a<n<=b} chi(n)|, from one period of prefix sums."""
    table = kronecker_table(disc).astype(np.int64)
    pref = np.concatenate([[0], np.cumsum(np.roll(table, -1))])
    return int(pref.max() - pref.min())


def genus_factorization_residual(d: int, limit: int) -> int:
    """max_n |r(n, psi_1) - (chi_{-4} * chi_d)(n)| for n <= limit."""
    if not (is_prime(d) and d % 4 == 1):
        raise ValueError(f"d={d} must be a prime = 1 mod 4")
    G = build_class_group(FundDisc(d, -4 * d).D)
    psi1 = genus_characters(d)[1]
    r = np.rint(r_table(G, limit, [psi1])[0].real).astype(np.int64)
    conv = dirichlet_convolution(kronecker_table(-4, limit + 1),
                                 kronecker_table(d, limit + 1))
    return int(np.max(np.abs(r[1:] - conv[1:]))) if limit >= 1 else 0


def dirichlet_convolution(f: np.ndarray, g: np.ndarray) -> np.ndarray:
    """(f * g)(n) = sum_{ab = n} f(a) g(b) for n < len(f)."""
    X = len(f) - 1
    f = f.astype(np.int64)
    g = g.astype(np.int64)
    out = np.zeros(X + 1, dtype=np.int64)
    for a in range(1, X + 1):
        if f[a]:
            out[a::a] += f[a] * g[1: X // a + 1]
    return out


def ideal_count_ratio(D: int, x: int) -> tuple[int, float]:
    """Sum_{n <= x} (1 * chi_D)(n) and its ratio to x log|D|."""
    chi = kronecker_table(D, x + 1).astype(np.int64)
    # sum_{n<=x} sum_{l | n} chi(l) = sum_{l <= x} chi(l) floor(x / l)
    l = np.arange(1, x + 1)
    total = int(np.dot(chi[1:], x // l))
    return total, total / (x * math.log(abs(D)))
