"""Acceptance criteria 1-11; each test prints one PASS/FAIL line."""

import math
import os
import random
import threading
import time

import numpy as np
import psutil
import pytest

from qfcover.arith import (fundamental_discriminants, is_prime, is_squarefree, kronecker,
                           one_star_chi_table)
from qfcover.classgroup import (R_table, build_class_group, characters, genus_characters,
                                r_coeff_exact, r_table, ring_add, ring_const, ring_mul)
from qfcover.coverage import (coverage_bitmap, omega_counts, phase_experiment,
                              selberg_compare, squarefree_equivalent)
from qfcover.lfunctions import certified_class_number, genus_factorization_residual
from qfcover.moments import (MomentContext, build_Dj, default_k, moment_sum, prop55_average)
from qfcover.quadforms import class_number, principal_rep_counts_upto


@pytest.fixture
def report(capsys):
    def emit(num, title, ok, detail=""):
        with capsys.disabled():
            print(f"\n[criterion {num:>2}] {'PASS' if ok else 'FAIL'}  {title}  {detail}")
    return emit


def test_c01_orthogonality_reconstruction(report):
    X = 2000
    worst, bad = 0.0, []
    for D in fundamental_discriminants(-500, -3):
        G = build_class_group(D)
        raw = r_table(G, X).sum(axis=0)          # h R_D(n) before rounding
        dist = float(np.max(np.abs(raw - np.rint(raw.real))))
        worst = max(worst, dist)
        R = np.rint(raw.real).astype(np.int64) // G.h
        oracle = G.ideal_counts_upto(X)[0]
        if dist > 1e-6 or np.any(np.rint(raw.real) % G.h) or np.any(R > one_star_chi_table(D, X)) \
                or not np.array_equal(R[1:], oracle[1:]):
            bad.append(D)
    ok = not bad
    report(1, "orthogonality reconstruction", ok, f"max distance {worst:.2e}, failures {bad[:5]}")
    assert ok


def test_c02_principal_form_counts(report):
    X = 5000
    failures = []
    R = {}

    def RD(D):
        if D not in R:
            R[D] = R_table(build_class_group(D), X)
        return R[D]

    # case 1: squarefree d = 1, 2 mod 4
    for d in range(1, 61):
        if is_squarefree(d) and d % 4 in (1, 2):
            rep = principal_rep_counts_upto(d, X)
            factor = 4 if d == 1 else 2
            if not np.array_equal(rep[1:], factor * RD(-4 * d)[1:]):
                failures.append(("case1", d))
    # case 3: prime d = 7 mod 8, odd n
    for d in range(7, 201, 8):
        if is_prime(d):
            rep = principal_rep_counts_upto(d, X)
            if not np.array_equal(rep[1::2], 2 * RD(-d)[1::2]):
                failures.append(("case3", d))
    # case 2: squarefree d = 3 mod 4, inequality with a strict witness
    witnesses = []
    for d in range(3, 61, 4):
        if not is_squarefree(d):
            continue
        rep = principal_rep_counts_upto(d, X)
        bound = (6 if d == 3 else 2) * RD(-d)
        if np.any(rep[1:] > bound[1:]):
            failures.append(("case2", d))
        strict = np.flatnonzero(rep[1:] < bound[1:]) + 1
        if strict.size:
            witnesses.append((d, int(strict[0])))
    ok = not failures and bool(witnesses)
    report(2, "principal-form representation counts", ok,
           f"failures {failures[:5]}, strict witnesses e.g. {witnesses[:3]}")
    assert ok


def test_c03_class_number_formula(report):
    t0 = time.perf_counter()
    discs = fundamental_discriminants(-10**4, -3)
    mismatched = []
    for D in discs:
        h, ok, _ = certified_class_number(D)
        if not ok or h != class_number(D):
            mismatched.append(D)
    elapsed = time.perf_counter() - t0
    ok = not mismatched and elapsed <= 120
    report(3, "class number formula", ok,
           f"{len(discs)} discriminants, {len(mismatched)} mismatches, {elapsed:.1f}s")
    assert ok


def test_c04_genus_identities(report):
    bad = []
    ds = [d for d in range(5, 201, 4) if is_prime(d)]
    n = np.arange(5001)
    chi4 = np.array([kronecker(-4, int(k)) for k in n])
    for d in ds:
        psi0, psi1 = genus_characters(d)
        G = build_class_group(-4 * d)
        r = r_table(G, 5000, [psi0, psi1])
        if np.max(np.abs(r.imag)) > 1e-9:
            bad.append((d, "imag"))
        r0, r1 = np.rint(r.real).astype(np.int64)
        odd = n % 2 == 1
        if not np.array_equal(r1[odd], chi4[odd] * r0[odd]):
            bad.append((d, "odd"))
        if genus_factorization_residual(d, 2000) != 0:
            bad.append((d, "residual"))
    ok = not bad
    report(4, "genus identities", ok, f"{len(ds)} primes, failures {bad[:5]}")
    assert ok


def test_c05_character_algebra(report):
    checked, bad = 0, []
    for D in fundamental_discriminants(-500, -3):
        G = build_class_group(D)
        G.ideal_counts_upto(1000)
        chars = characters(G)
        L = chars[0].modulus
        pos = {c.k: i for i, c in enumerate(chars)}
        prod = [[pos[(a * b).k] for b in chars] for a in chars]
        conj_prod = [[pos[(a.conj() * b).k] for b in chars] for a in chars]
        square = [pos[(a * a).k] for a in chars]
        for p in range(2, 1000):
            if not is_prime(p) or D % p == 0:
                continue
            r = [r_coeff_exact(p, c, G) for c in chars]
            base = ring_const(1 + kronecker(D, p), L)
            for a in range(len(chars)):
                if ring_mul(r[a], r[a]) != ring_add(base, r[square[a]]):
                    bad.append((D, p, a, "split"))
                for b in range(len(chars)):
                    checked += 1
                    if ring_mul(r[a], r[b]) != ring_add(r[prod[a][b]], r[conj_prod[a][b]]):
                        bad.append((D, p, a, b))
    ok = not bad
    report(5, "character algebra at unramified primes", ok, f"{checked} products, failures {bad[:3]}")
    assert ok


def _brute(N, dmax):
    out = np.zeros(N + 1, dtype=bool)
    for d in range(1, dmax + 1):
        for y in range(0, math.isqrt(N // d) + 1):
            x = np.arange(0, math.isqrt(N - d * y * y) + 1)
            out[x * x + d * y * y] = True
    out[0] = False
    return out


def test_c06_sieve_correctness(report):
    problems = []
    rng = random.Random(20240601)
    Ns = sorted(set(range(1, 130)) | {rng.randrange(130, 10**4) for _ in range(60)} | {10**4})
    for dmax in range(1, 21):
        full = _brute(10**4, dmax)
        for N in Ns:
            b = coverage_bitmap(N, range(1, dmax + 1), segment=8 * rng.randrange(1, 200))
            if not np.array_equal(b.to_bool(), full[: N + 1]):
                problems.append(("brute", N, dmax))
        ref = coverage_bitmap(10**4, range(1, dmax + 1))
        if ref != coverage_bitmap(10**4, range(1, dmax + 1), segment=1 << 24, workers=1) or \
                ref != coverage_bitmap(10**4, range(1, dmax + 1), segment=64, workers=8):
            problems.append(("determinism", dmax))
    N = 10**6
    prev = None
    for dmax in range(1, 101):
        allb = coverage_bitmap(N, range(1, dmax + 1), segment=1 << 16, workers=4)
        sq = coverage_bitmap(N, squarefree_equivalent(dmax))
        if allb != sq:
            problems.append(("squarefree", dmax))
        if prev is not None and not prev.implies(sq):
            problems.append(("monotone", dmax))
        prev = sq
    ok = not problems
    report(6, "sieve correctness", ok, f"problems {problems[:5]}")
    assert ok


def test_c07_cross_residue_zero(report):
    Dj = build_Dj(1, 500, 2)
    N = 10**5
    ctx = MomentContext(N, default_k(N), 1, 2)
    pairs = [(a, b) for a in Dj.members for b in Dj.members if a < b and (a - b) % 8]
    nonzero = [(a, b) for a, b in pairs if moment_sum("5.3", ctx, Dj, a, b).lhs != 0.0]
    ok = len(pairs) >= 10 and not nonzero
    report(7, "cross-residue moment is exactly zero", ok, f"{len(pairs)} pairs, nonzero {nonzero[:3]}")
    assert ok


def test_c08_selberg(report):
    t0 = time.perf_counter()
    rows = selberg_compare(10**8, [2, 3, 4, 5], counts=omega_counts(10**8))
    elapsed = time.perf_counter() - t0
    ratios = [r["ratio"] for r in rows]
    ok = all(0.5 <= x <= 2.0 for x in ratios) and elapsed <= 180
    report(8, "prime-factor-count comparison", ok,
           f"ratios {[round(x, 4) for x in ratios]}, {elapsed:.1f}s")
    assert ok


def test_c09_phase_transition(report):
    rows = phase_experiment(10**8, [-3, -2, -1, 0, 1, 2, 3])
    fr = [r["fraction"] for r in rows]
    ok = (all(a <= b for a, b in zip(fr, fr[1:])) and fr[-1] - fr[0] >= 0.15
          and 0.2 <= fr[3] <= 0.8)
    report(9, "phase transition", ok, "fractions " + ", ".join(f"{r['alpha']:+.0f}:{r['fraction']:.4f}" for r in rows))
    assert ok


def test_c10_moments(report):
    N, W, j, delta = 10**6, 2, 0, 300
    Dj = build_Dj(j, delta, W)
    ctx = MomentContext(N, default_k(N), j, W)
    r52 = [moment_sum("5.2", ctx, Dj, d).ratio for d in Dj.members]
    mean52 = sum(r52) / len(r52)
    p300 = prop55_average(j, delta, W)
    p1000 = prop55_average(j, 1000, W, tol=1e-2)
    ok = 0.5 <= mean52 <= 1.5 and 2 / 3 <= p300.ratio <= 1.5 and p300.flagged == 0
    trend = "closer" if abs(p1000.ratio - 1) <= abs(p300.ratio - 1) else "farther"
    report(10, "moment sanity", ok,
           f"first moment mean ratio {mean52:.4f} over {len(Dj)} d; L-average ratio {p300.ratio:.4f} "
           f"(Delta=300), {p1000.ratio:.4f} (Delta=1000, {trend}, recorded only)")
    assert ok


def _timed_with_peak_rss(fn):
    proc = psutil.Process(os.getpid())
    base = proc.memory_info().rss
    peak = [base]
    stop = threading.Event()

    def sample():
        while not stop.is_set():
            peak[0] = max(peak[0], proc.memory_info().rss)
            time.sleep(0.005)

    th = threading.Thread(target=sample, daemon=True)
    th.start()
    t0 = time.perf_counter()
    result = fn()
    elapsed = time.perf_counter() - t0
    stop.set()
    th.join()
    return result, elapsed, peak[0] - base


def test_c11_performance(report):
    ds = squarefree_equivalent(256)
    N = 10**8
    coverage_bitmap(1000, ds)  # compile outside the timed region
    b1, t1, mem1 = _timed_with_peak_rss(lambda: coverage_bitmap(N, ds, workers=1))
    b8, t8, mem8 = _timed_with_peak_rss(lambda: coverage_bitmap(N, ds, workers=8))
    bitmap_mb = b1.bits.nbytes / 2**20
    extra = max(mem1, mem8) / 2**20 - bitmap_mb
    ok = t1 <= 60 and t8 <= 15 and extra <= 64 and b1 == b8
    report(11, "performance budget", ok,
           f"1 worker {t1:.1f}s, 8 workers {t8:.1f}s on {os.cpu_count()} cpu(s), "
           f"peak beyond bitmap {extra:.1f} MB")
    assert ok
