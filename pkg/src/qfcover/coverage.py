"""Which n <= N are x^2 + d y^2 for some d in a set, and counts by Omega(n).

The bitmap stores bit (n - 1) for n in [1, N], little-endian inside each
byte.  Work is split into segments of bit-aligned output; workers own whole
segments, so the result does not depend on scheduling.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from numba import njit

from .arith import gaussian_cdf, is_squarefree, primes_upto

DEFAULT_SEGMENT = 1 << 24
MAX_BITMAP_BYTES = 1 << 30


@dataclass(frozen=True, eq=False)
class CoverageBitmap:
    limit: int
    bits: np.ndarray  # uint8, ceil(limit / 8) bytes

    def __contains__(self, n: int) -> bool:
        if not 1 <= n <= self.limit:
            return False
        i = n - 1
        return bool((self.bits[i >> 3] >> (i & 7)) & 1)

    def to_bool(self) -> np.ndarray:
        """Boolean array indexed by n (entry 0 is False)."""
        out = np.zeros(self.limit + 1, dtype=bool)
        out[1:] = np.unpackbits(self.bits, bitorder="little")[: self.limit].astype(bool)
        return out

    def members(self) -> list[int]:
        return (np.flatnonzero(self.to_bool())).tolist()

    def popcount(self) -> int:
        return int(np.unpackbits(self.bits, bitorder="little")[: self.limit].sum(dtype=np.int64))

    def implies(self, other: "CoverageBitmap") -> bool:
        """Every bit set here is set in ``other``."""
        return self.limit == other.limit and not np.any(self.bits & ~other.bits)

    def __eq__(self, other):
        return (isinstance(other, CoverageBitmap) and self.limit == other.limit
                and np.array_equal(self.bits, other.bits))


@njit(cache=True, nogil=True)
def _isqrt(n):
    r = int(math.sqrt(n))
    while r * r > n:
        r -= 1
    while (r + 1) * (r + 1) <= n:
        r += 1
    return r


@njit(cache=True, nogil=True)
def _mark_segments(bits, N, ds, seg_lo, seg_hi, seg_size):
    # segments [seg*seg_size + 1, (seg+1)*seg_size] for seg in [seg_lo, seg_hi)
    for seg in range(seg_lo, seg_hi):
        lo = seg * seg_size + 1
        hi = min(lo + seg_size, N + 1)  # exclusive
        if lo >= hi:
            break
        # y = 0: perfect squares
        x = _isqrt(lo - 1)
        if x * x < lo:
            x += 1
        while x * x < hi:
            i = x * x - 1
            bits[i >> 3] |= np.uint8(1 << (i & 7))
            x += 1
        for t in range(ds.shape[0]):
            d = ds[t]
            y = 1
            while d * y * y < hi:
                base = d * y * y
                if base >= lo:
                    x = 0
                else:
                    x = _isqrt(lo - base - 1) + 1
                v = base + x * x
                while v < hi:
                    i = v - 1
                    bits[i >> 3] |= np.uint8(1 << (i & 7))
                    x += 1
                    v = base + x * x
                y += 1


def _check_segment(segment: int) -> int:
    if segment < 8 or segment % 8:
        raise ValueError("segment size must be a positive multiple of 8")
    return segment


def coverage_bitmap(N: int, d_set, segment: int = DEFAULT_SEGMENT, workers: int = 1,
                    into: CoverageBitmap | None = None) -> CoverageBitmap:
    """Bitmap of n <= N with n = x^2 + d y^2 for some d in ``d_set``.

    ``into`` lets an existing bitmap (for a subset of generators) be extended
    in place, which is how nested generator sets are swept cheaply.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    ds = np.array(sorted(set(int(d) for d in d_set)), dtype=np.int64)
    if ds.size == 0 or ds[0] < 1:
        raise ValueError("d_set must be nonempty with every d >= 1")
    _check_segment(segment)
    nbytes = (N + 7) // 8
    if nbytes > MAX_BITMAP_BYTES:
        raise MemoryError(f"bitmap for N={N} needs {nbytes} bytes; reduce N or segment the run")
    if into is None:
        bits = np.zeros(nbytes, dtype=np.uint8)
    else:
        if into.limit != N:
            raise ValueError("existing bitmap has a different limit")
        bits = into.bits
    nseg = (N + segment - 1) // segment
    if workers <= 1 or nseg == 1:
        _mark_segments(bits, N, ds, 0, nseg, segment)
    else:
        # interleaved blocks of segments balance the cheaper low end
        chunks = [(s, s + 1) for s in range(nseg)]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(lambda c: _mark_segments(bits, N, ds, c[0], c[1], segment), chunks))
    return CoverageBitmap(N, bits)


def squarefree_equivalent(d_max: float) -> list[int]:
    """Squarefree d <= d_max; x^2 + d1 d2^2 y^2 values are already x^2 + d1 y'^2 values."""
    return [d for d in range(1, int(math.floor(d_max)) + 1) if is_squarefree(d)]


# --------------------------------------------------------------------------
# Omega(n) by segments
# --------------------------------------------------------------------------

@njit(cache=True, nogil=True)
def _omega_segment(lo, hi, primes, rem, om):
    # Omega(n) for n in [lo, hi) into om[0 : hi - lo]; rem is scratch
    L = hi - lo
    for i in range(L):
        rem[i] = lo + i
        om[i] = 0
    for t in range(primes.shape[0]):
        p = primes[t]
        if p * p >= hi:
            break
        q = p
        while q < hi:
            start = ((lo + q - 1) // q) * q
            for m in range(start, hi, q):
                om[m - lo] += 1
                rem[m - lo] //= p
            if q > (hi - 1) // p:
                break
            q *= p
    for i in range(L):
        if rem[i] > 1:
            om[i] += 1


@njit(cache=True, nogil=True)
def _tally(N, primes, seg_size, bits, use_bits, kmax, counts):
    # counts[k, cls, covered] with cls 0: odd, 1: 2 mod 4, 2: 0 mod 4
    rem = np.empty(seg_size, dtype=np.int64)
    om = np.empty(seg_size, dtype=np.int64)
    lo = 1
    while lo <= N:
        hi = min(lo + seg_size, N + 1)
        _omega_segment(lo, hi, primes, rem, om)
        for i in range(hi - lo):
            n = lo + i
            k = om[i]
            if k > kmax:
                k = kmax
            if n % 2 == 1:
                cls = 0
            elif n % 4 == 2:
                cls = 1
            else:
                cls = 2
            cov = 0
            if use_bits:
                j = n - 1
                cov = (bits[j >> 3] >> (j & 7)) & 1
            counts[k, cls, cov] += 1
        lo = hi


@njit(cache=True, nogil=True)
def _weighted_sum(N, X, primes, seg_size, k, j):
    rem = np.empty(seg_size, dtype=np.int64)
    om = np.empty(seg_size, dtype=np.int64)
    s = 0.0
    comp = 0.0
    lo = 1
    while lo <= X:
        hi = min(lo + seg_size, X + 1)
        _omega_segment(lo, hi, primes, rem, om)
        for i in range(hi - lo):
            n = lo + i
            if om[i] != k:
                continue
            v = 0
            m = n
            while m % 2 == 0:
                m //= 2
                v += 1
            if v != j:
                continue
            t = math.exp(-n / N)
            u = s + t
            if abs(s) >= abs(t):
                comp += (s - u) + t
            else:
                comp += (t - u) + s
            s = u
        lo = hi
    return s + comp


@dataclass(frozen=True)
class KCountTable:
    """Counts per k = Omega(n) (last row pools k >= kmax).

    Arrays have shape (kmax + 1,); ``by_class`` arrays have shape
    (kmax + 1, 3) for n odd, n = 2 mod 4, n = 0 mod 4.
    """

    N: int
    d_max: float
    A: np.ndarray
    covered: np.ndarray
    A_class: np.ndarray
    covered_class: np.ndarray

    @property
    def uncovered(self) -> np.ndarray:
        return self.A - self.covered

    def rows(self) -> list[dict]:
        out = []
        for k in range(len(self.A)):
            if self.A[k] == 0:
                continue
            out.append({
                "k": k, "A": int(self.A[k]), "covered": int(self.covered[k]),
                "uncovered": int(self.uncovered[k]),
                "A0": int(self.A_class[k, 0]), "covered0": int(self.covered_class[k, 0]),
                "A1": int(self.A_class[k, 1]), "covered1": int(self.covered_class[k, 1]),
                "A4": int(self.A_class[k, 2]), "covered4": int(self.covered_class[k, 2]),
            })
        return out


def _kmax_for(N: int) -> int:
    return max(1, N.bit_length())


def omega_counts(N: int, segment: int = 1 << 20, bitmap: CoverageBitmap | None = None,
                 tables=None) -> np.ndarray:
    """counts[k, cls, covered] for 1 <= n <= N."""
    kmax = _kmax_for(N)
    counts = np.zeros((kmax + 1, 3, 2), dtype=np.int64)
    bits = bitmap.bits if bitmap is not None else np.zeros(1, dtype=np.uint8)
    if tables is not None:
        if tables.limit < N:
            raise ValueError("sieve tables too small")
        n = np.arange(1, N + 1)
        k = tables.omega[1: N + 1].astype(np.int64)
        cls = np.where(n % 2 == 1, 0, np.where(n % 4 == 2, 1, 2))
        cov = bitmap.to_bool()[1:].astype(np.int64) if bitmap is not None else 0 * n
        np.add.at(counts, (k, cls, cov), 1)
        return counts
    primes = primes_upto(math.isqrt(N) + 1)
    _tally(N, primes, min(segment, N), bits, bitmap is not None, kmax, counts)
    return counts


def count_by_k(N: int, d_max: float, tables=None, workers: int = 1,
               segment: int = DEFAULT_SEGMENT) -> KCountTable:
    ds = squarefree_equivalent(d_max)
    bitmap = coverage_bitmap(N, ds, segment=segment, workers=workers) if ds else None
    c = omega_counts(N, bitmap=bitmap, tables=tables)
    A_class = c.sum(axis=2)
    covered_class = c[:, :, 1]
    return KCountTable(N, d_max, A_class.sum(axis=1), covered_class.sum(axis=1),
                       A_class, covered_class)


def weighted_count(N: int, k: int, j: int, cutoff: int, segment: int = 1 << 20) -> float:
    """Sum of exp(-n/N) over n <= cutoff with Omega(n) = k and v2(n) = j."""
    primes = primes_upto(math.isqrt(cutoff) + 1)
    return float(_weighted_sum(N, cutoff, primes, min(segment, cutoff), k, j))


# --------------------------------------------------------------------------
# Experiments
# --------------------------------------------------------------------------

def delta_of_alpha(N: float, alpha: float) -> float:
    """(log N)^{log 2} 2^{alpha sqrt(log log N)}."""
    L = math.log(N)
    return L ** math.log(2) * 2 ** (alpha * math.sqrt(math.log(L)))


def phase_experiment(N: int, alphas, workers: int = 1,
                     segment: int = DEFAULT_SEGMENT) -> list[dict]:
    """Covered fraction of [1, N] with d <= Delta(alpha), for each alpha (ascending)."""
    if N < 16:
        raise ValueError("N must be >= 16")
    rows = []
    bitmap = None
    used: set[int] = set()
    for alpha in sorted(float(a) for a in alphas):
        delta = delta_of_alpha(N, alpha)
        ds = squarefree_equivalent(delta)
        new = [d for d in ds if d not in used]
        if new:
            bitmap = coverage_bitmap(N, new, segment=segment, workers=workers, into=bitmap)
            used.update(new)
        covered = bitmap.popcount() if bitmap is not None else 0
        rows.append({"alpha": alpha, "delta": delta, "covered": covered,
                     "fraction": covered / N, "phi": gaussian_cdf(alpha)})
    return rows


def selberg_compare(N: int, k_range, counts: np.ndarray | None = None) -> list[dict]:
    """|A(N, k)| against N / log N * k0^k / k!."""
    if N < 16:
        raise ValueError("N must be >= 16")
    if counts is None:
        counts = omega_counts(N)
    A = counts.sum(axis=(1, 2))
    k0 = math.log(math.log(N))
    rows = []
    for k in k_range:
        actual = int(A[k]) if k < len(A) - 1 else 0
        pred = N / math.log(N) * k0 ** k / math.factorial(k)
        rows.append({"k": k, "count": actual, "prediction": pred, "ratio": actual / pred})
    return rows


def prop41_count(N: int, d: int, k: int, counts=None) -> dict:
    """Members of A(N, k) represented by x^2 + d y^2, and the normalized ratio."""
    if not is_squarefree(d):
        raise ValueError(f"d={d} must be squarefree")
    if d > math.log(N):
        warnings.warn(f"d={d} exceeds log N={math.log(N):.2f}")
    bitmap = coverage_bitmap(N, [d])
    c = omega_counts(N, bitmap=bitmap) if counts is None else counts
    kk = min(k, c.shape[0] - 1)
    count = int(c[kk, :, 1].sum()) if k < c.shape[0] - 1 else 0
    A = int(c[kk].sum()) if k < c.shape[0] - 1 else 0
    ratio = count * 2 ** k / (N * math.log(math.log(N)) ** 3)
    return {"N": N, "d": d, "k": k, "count": count, "A": A, "ratio": ratio}
