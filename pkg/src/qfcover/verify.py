"""Oracle cross-checks run by ``qfcover verify``.

Each check compares a fast code path with an independent slow one on a
small range and returns (name, passed, detail).
"""

from __future__ import annotations

import math

import numpy as np

from .arith import (build_sieve, fundamental_discriminants, is_prime, kronecker,
                    one_star_chi_table, primes_upto)
from .classgroup import (R_table, build_class_group, characters, r_coeff_exact, ring_add,
                         ring_const, ring_mul)
from .coverage import coverage_bitmap, omega_counts, squarefree_equivalent
from .lfunctions import certified_class_number, genus_factorization_residual
from .quadforms import QuadForm, class_number, principal_rep_counts_upto, rep_counts_upto


def _euler(D: int, p: int) -> int:
    if D % p == 0:
        return 0
    return 1 if pow(D % p, (p - 1) // 2, p) == 1 else -1


def check_kronecker():
    bad = [(D, int(p)) for D in fundamental_discriminants(-400, -3)
           for p in primes_upto(300) if p > 2 and kronecker(D, int(p)) != _euler(D, int(p))]
    return not bad, f"{len(bad)} disagreements with Euler's criterion"


def check_class_numbers():
    bad = 0
    for D in fundamental_discriminants(-2000, -3):
        naive = 0
        for a in range(1, math.isqrt(-D // 3) + 1):
            for b in range(-a + 1, a + 1):
                if (b * b - D) % (4 * a) == 0:
                    c = (b * b - D) // (4 * a)
                    f = QuadForm(a, b, c)
                    if f.is_reduced() and f.is_primitive():
                        naive += 1
        h, ok, _ = certified_class_number(D)
        bad += not (naive == class_number(D) == h and ok)
    return bad == 0, f"{bad} discriminants disagree"


def check_orthogonality(X: int = 500):
    bad = 0
    for D in fundamental_discriminants(-300, -3):
        G = build_class_group(D)
        R = R_table(G, X)
        principal = rep_counts_upto(G.classes[0], X) // G.w
        bad += not np.array_equal(R[1:], principal[1:])
        bad += bool(np.any(R > one_star_chi_table(D, X)))
    return bad == 0, f"{bad} failures for n <= {X}"


def check_character_algebra():
    bad = 0
    for D in fundamental_discriminants(-200, -3):
        G = build_class_group(D)
        chars = characters(G)
        L = chars[0].modulus
        for p in primes_upto(300):
            p = int(p)
            if D % p == 0:
                continue
            r = {i: r_coeff_exact(p, c, G) for i, c in enumerate(chars)}
            for a, ca in enumerate(chars):
                sq = r_coeff_exact(p, ca * ca, G)
                # psi^2 over primes of norm p is r(p, psi^2) in the unramified case
                rhs = ring_add(ring_const(1 + kronecker(D, p), L), sq)
                bad += ring_mul(r[a], r[a]) != rhs
                for b, cb in enumerate(chars):
                    lhs = ring_mul(r[a], r[b])
                    rhs = ring_add(r_coeff_exact(p, ca * cb, G), r_coeff_exact(p, ca.conj() * cb, G))
                    bad += lhs != rhs
    return bad == 0, f"{bad} identity failures"


def check_genus():
    worst = max(genus_factorization_residual(d, 1000) for d in range(5, 120, 4) if is_prime(d))
    return worst == 0, f"max residual {worst}"


def check_sieve():
    N = 3000
    bad = 0
    for dmax in (1, 3, 7, 20):
        brute = np.zeros(N + 1, dtype=bool)
        for d in range(1, dmax + 1):
            for y in range(0, math.isqrt(N // d) + 1):
                for x in range(0, math.isqrt(N - d * y * y) + 1):
                    if x or y:
                        brute[x * x + d * y * y] = True
        full = coverage_bitmap(N, range(1, dmax + 1), segment=64)
        bad += not np.array_equal(full.to_bool(), brute)
        bad += full != coverage_bitmap(N, squarefree_equivalent(dmax), workers=3, segment=256)
    return bad == 0, f"{bad} bitmap mismatches"


def check_omega():
    N = 20000
    t = build_sieve(N)
    seg = omega_counts(N, segment=1000)
    table = omega_counts(N, tables=t)
    return bool(np.array_equal(seg, table)), "segmented vs smallest-prime-factor tally"


def check_principal_counts():
    bad = 0
    for d in (1, 2, 5, 6, 10, 13, 14):
        D = -4 * d
        R = R_table(build_class_group(D), 2000)
        rep = principal_rep_counts_upto(d, 2000)
        bad += not np.array_equal(rep[1:], (4 if d == 1 else 2) * R[1:])
    return bad == 0, f"{bad} mismatches"


CHECKS = [
    ("kronecker vs Euler criterion", check_kronecker),
    ("class numbers: naive, reduced, analytic", check_class_numbers),
    ("orthogonality reconstruction", check_orthogonality),
    ("character algebra at unramified primes", check_character_algebra),
    ("genus factorization residual", check_genus),
    ("coverage sieve vs brute force", check_sieve),
    ("Omega tallies", check_omega),
    ("principal form counts", check_principal_counts),
]


def run_checks():
    out = []
    for name, fn in CHECKS:
        try:
            ok, detail = fn()
        except Exception as exc:  # a crash is a failed check, not a crashed runner
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        out.append((name, bool(ok), detail))
    return out
