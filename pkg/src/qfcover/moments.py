"""Second-moment statistics over the good prime sets D_0, D_1.

Every left-hand side here is a finite weighted sum over n with Omega(n) = k
and v2(n) = j, truncated where exp(-n/N) drops below ``EPS_TAIL``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from numba import njit

from . import lfunctions
from .arith import (assoc_discriminant, build_sieve, factorize, gamma_W, is_prime,
                    kronecker, kronecker_table, primes_upto)
from .classgroup import R_D, build_class_group, character_matrix, characters
from .coverage import coverage_bitmap
from .quadforms import principal_form, rep_counts_upto

EPS_TAIL = 1e-12
L_TOL = 1e-3


@dataclass(frozen=True)
class DjSet:
    j: int
    Delta: float
    W: float
    members: tuple[int, ...]

    def __len__(self):
        return len(self.members)

    def __contains__(self, d):
        return d in self.members


def in_Dj(d: int, j: int, Delta: float, W: float) -> bool:
    """Membership predicate, checked one candidate at a time."""
    if not (Delta / math.log(Delta) <= d <= Delta and is_prime(d)):
        return False
    if j == 0:
        if d % 8 != 7:
            return False
        return all(kronecker(-d, int(p)) == 1 for p in primes_upto(int(W)))
    if j == 1:
        if d % 4 != 1:
            return False
        return all(kronecker(-4 * d, int(p)) == 1 for p in primes_upto(int(W)) if p > 2)
    raise ValueError("j must be 0 or 1")


def build_Dj(j: int, Delta: float, W: float = 2) -> DjSet:
    if j not in (0, 1):
        raise ValueError("j must be 0 or 1")
    if Delta < 8:
        raise ValueError("Delta must be >= 8")
    if W < 2:
        raise ValueError("W must be >= 2")
    lo = math.ceil(Delta / math.log(Delta))
    residue, modulus = (7, 8) if j == 0 else (1, 4)
    members = []
    for d in range(lo, int(math.floor(Delta)) + 1):
        if d % modulus != residue or not is_prime(d):
            continue
        D = -d if j == 0 else -4 * d
        if all(kronecker(D, int(p)) == 1 for p in primes_upto(int(W)) if j == 0 or p > 2):
            members.append(d)
    if not members:
        warnings.warn(f"D_{j} is empty for Delta={Delta}, W={W}")
    return DjSet(j, Delta, W, tuple(members))


def default_k(N: float) -> int:
    return round(math.log(math.log(N)))


def tail_cutoff(N: int, eps: float = EPS_TAIL) -> int:
    return math.ceil(N * math.log(1 / eps))


def _disc_for(d: int, j: int) -> int:
    return -d if j == 0 else -4 * d


@dataclass
class MomentReport:
    prop: str
    j: int
    N: int
    k: int
    Delta: float
    W: float
    lhs: float
    main_term: float
    gamma_W: float
    Dj_size: int
    d: int | None = None
    d_tilde: int | None = None
    L_values: tuple[float, ...] = ()
    cutoff: int = 0
    tail_mass: float = 0.0
    flagged: int = 0

    @property
    def ratio(self) -> float:
        return self.lhs / self.main_term if self.main_term else math.nan

    def row(self) -> dict:
        return {"prop": self.prop, "j": self.j, "N": self.N, "k": self.k,
                "Delta": self.Delta, "W": self.W, "d": self.d, "d_tilde": self.d_tilde,
                "lhs": self.lhs, "main_term": self.main_term, "ratio": self.ratio,
                "gamma_W": self.gamma_W, "Dj_size": self.Dj_size,
                "L_values": ";".join(repr(v) for v in self.L_values),
                "cutoff": self.cutoff, "tail_mass": self.tail_mass, "flagged": self.flagged}


@njit(cache=True)
def _select(omega, k, j, cutoff):
    # n in [1, cutoff] with Omega(n) = k and v2(n) = j
    out = np.empty(cutoff, dtype=np.int64)
    m = 0
    for n in range(1, cutoff + 1):
        if omega[n] != k:
            continue
        v = 0
        t = n
        while t % 2 == 0:
            t //= 2
            v += 1
        if v == j:
            out[m] = n
            m += 1
    return out[:m]


@njit(cache=True)
def _tau_small(idx, primes):
    out = np.ones(idx.shape[0], dtype=np.int64)
    for i in range(idx.shape[0]):
        n = idx[i]
        for p in primes:
            e = 0
            while n % p == 0:
                n //= p
                e += 1
            out[i] *= e + 1
    return out


@njit(cache=True)
def _ideal_counts_spf(idx, spf, chi):
    # (1 * chi_D)(n) from the factorization; chi is one period of chi_D
    q = chi.shape[0]
    out = np.empty(idx.shape[0], dtype=np.int64)
    for i in range(idx.shape[0]):
        n = idx[i]
        total = 1
        while n > 1:
            p = spf[n]
            e = 0
            while n % p == 0:
                n //= p
                e += 1
            c = chi[p % q]
            if c == 1:
                total *= e + 1
            elif c == -1 and e % 2 == 1:
                total = 0
                break
        out[i] = total
    return out


class MomentContext:
    """Shared selection of n for fixed (N, k, j, W); R_D arrays cached per d."""

    def __init__(self, N: int, k: int, j: int, W: float = 2, eps: float = EPS_TAIL):
        if j not in (0, 1):
            raise ValueError("j must be 0 or 1")
        if k < 0:
            raise ValueError("k must be >= 0")
        self.N, self.k, self.j, self.W = int(N), int(k), j, W
        self.cutoff = tail_cutoff(self.N, eps)
        self.tables = build_sieve(self.cutoff)
        self.idx = _select(self.tables.omega, self.k, j, self.cutoff)
        self.weights = np.exp(-self.idx / self.N)
        self.tau = _tau_small(self.idx, primes_upto(int(W)))
        self.gamma = gamma_W(W)
        # sum_{n > cutoff} exp(-n/N)
        self.tail_mass = math.exp(-self.cutoff / self.N) / -math.expm1(-1 / self.N)
        self._rd: dict[int, np.ndarray] = {}

    @cached_property
    def weighted_count(self) -> float:
        return math.fsum(self.weights)

    def R(self, d: int) -> np.ndarray:
        """R_D(n) at the selected n, from principal-form lattice counts / w."""
        if d not in self._rd:
            D = _disc_for(d, self.j)
            w = lfunctions.unit_count(D)
            counts = rep_counts_upto(principal_form(D), self.cutoff, dtype=np.uint32)
            sel = counts[self.idx].astype(np.int64)
            if np.any(sel % w):
                raise ArithmeticError(f"representation counts for D={D} not divisible by w")
            self._rd[d] = sel // w
        return self._rd[d]

    def principal_part(self, d: int) -> np.ndarray:
        """r(n, psi_0) = (1 * chi_D)(n) at the selected n."""
        D = _disc_for(d, self.j)
        return _ideal_counts_spf(self.idx, self.tables.spf, kronecker_table(D).astype(np.int64))

    def nonprincipal_part(self, d: int) -> np.ndarray:
        """Sum over psi != psi_0 of r(n, psi), via class counts and the character table."""
        G = build_class_group(_disc_for(d, self.j))
        chars = characters(G)[1:]
        if not chars:
            return np.zeros(self.idx.shape[0], dtype=np.int64)
        weights = character_matrix(G, chars).sum(axis=0)  # per class
        acc = np.zeros(self.idx.shape[0], dtype=np.complex128)
        for c, f in enumerate(G.classes):
            counts = rep_counts_upto(f, self.cutoff, dtype=np.uint32)[self.idx]
            acc += weights[c] * (counts.astype(np.int64) // G.w)
        out = np.rint(acc.real)
        if np.max(np.abs(acc - out), initial=0.0) > 1e-6:
            raise ArithmeticError("character sum is not an integer")
        return out.astype(np.int64)


def _check_member(d, Dj: DjSet):
    if d not in Dj:
        raise ValueError(f"d={d} is not in D_{Dj.j}")


def f_statistic(n: int, j: int, Dj: DjSet, W: float | None = None) -> float:
    """Normalized average of R_D(n) over d in D_j."""
    if not Dj.members:
        raise ValueError("D_j is empty")
    W = Dj.W if W is None else W
    fi = factorize(n, W=W)
    if fi.v2 != j:
        raise ValueError(f"v2({n}) != {j}")
    tau = fi.tau_small
    g = gamma_W(W)
    terms = []
    for d in Dj.members:
        D = _disc_for(d, j)
        terms.append(math.sqrt(-D) / (math.pi * g) * R_D(n, build_class_group(D)) / tau)
    return math.fsum(terms) / len(Dj)


def _l_value(disc: int, tol: float = L_TOL, M0: int | None = None):
    est, ok = lfunctions.l1_to_tolerance(disc, tol, M0)
    return est.value, ok


def moment_sum(prop: str, ctx: MomentContext, Dj: DjSet, d: int,
               d_tilde: int | None = None, tol: float = L_TOL) -> MomentReport:
    """Left side and leading term of the first moment ("5.2"), the cross
    moment ("5.3") or the diagonal moment ("5.4") for the given d."""
    _check_member(d, Dj)
    if ctx.j != Dj.j:
        raise ValueError("context and D_j disagree on j")
    D = _disc_for(d, ctx.j)
    g = ctx.gamma
    base = dict(j=ctx.j, N=ctx.N, k=ctx.k, Delta=Dj.Delta, W=ctx.W, gamma_W=g,
                Dj_size=len(Dj), d=d, cutoff=ctx.cutoff, tail_mass=ctx.tail_mass)
    Rd = ctx.R(d)
    if prop == "5.2":
        lhs = math.sqrt(-D) / (math.pi * g) * math.fsum(Rd / ctx.tau * ctx.weights)
        return MomentReport("5.2", lhs=lhs, main_term=ctx.weighted_count, **base)
    if prop == "5.3":
        if d_tilde is None or d_tilde == d:
            raise ValueError("prop 5.3 needs a second, different d")
        _check_member(d_tilde, Dj)
        Dt = _disc_for(d_tilde, ctx.j)
        prod = Rd * ctx.R(d_tilde)
        raw = math.fsum(prod / ctx.tau ** 2 * ctx.weights)
        lhs = math.sqrt(D * Dt) / (math.pi ** 2 * g * g) * raw
        if (d - d_tilde) % 8:
            return MomentReport("5.3", lhs=lhs, main_term=0.0, d_tilde=d_tilde, **base)
        L, ok = _l_value(d * d_tilde, tol)
        main = 2 ** ctx.j * g * L * ctx.weighted_count
        return MomentReport("5.3", lhs=lhs, main_term=main, d_tilde=d_tilde,
                            L_values=(L,), flagged=int(not ok), **base)
    if prop == "5.4":
        lhs = -D / (math.pi ** 2 * g * g) * math.fsum(Rd ** 2 / ctx.tau ** 2 * ctx.weights)
        L, ok = _l_value(D, tol)
        k0 = math.log(math.log(ctx.N))
        envelope = 2 ** ctx.k * ctx.N / (g * L) * k0 ** -0.5
        return MomentReport("5.4", lhs=lhs, main_term=envelope, L_values=(L,),
                            flagged=int(not ok), **base)
    raise ValueError(f"unknown proposition {prop!r}")


def principal_decomposition(ctx: MomentContext, d: int) -> dict:
    """First-moment sum computed directly and as principal + non-principal parts.

    The per-n identity h R_D(n) = r(n, psi_0) + sum_{psi != psi_0} r(n, psi) is
    checked exactly on integers before the weighted sums are formed.
    """
    G = build_class_group(_disc_for(d, ctx.j))
    direct = G.h * ctx.R(d)
    r0 = ctx.principal_part(d)
    rest = ctx.nonprincipal_part(d)
    exact = bool(np.array_equal(direct, r0 + rest))
    w = ctx.weights / ctx.tau
    return {"d": d, "h": G.h, "exact": exact,
            "direct": math.fsum(direct * w) / G.h,
            "principal": math.fsum(r0 * w) / G.h,
            "remainder": math.fsum(rest * w) / G.h}


def prop55_average(j: int, Delta: float, W: float = 2, tol: float = L_TOL,
                   Dj: DjSet | None = None) -> MomentReport:
    """Average of L(1, chi_{d d~}) over ordered pairs d != d~ in D_j with d = d~ mod 8."""
    Dj = build_Dj(j, Delta, W) if Dj is None else Dj
    if len(Dj) < 2:
        raise ValueError("D_j needs at least two members")
    M0 = math.ceil(Delta ** 1.5)
    values = []
    flagged = 0
    ms = Dj.members
    for a in range(len(ms)):
        for b in range(a + 1, len(ms)):
            if (ms[a] - ms[b]) % 8:
                continue
            q = ms[a] * ms[b]
            L, ok = _l_value(q, tol, max(q, M0))
            flagged += not ok
            values.append(L)
    lhs = 2 * math.fsum(values) / len(Dj) ** 2
    g = gamma_W(W)
    return MomentReport("5.5", j=j, N=0, k=0, Delta=Delta, W=W, lhs=lhs,
                        main_term=2.0 ** -j / g, gamma_W=g, Dj_size=len(Dj),
                        L_values=tuple(values), flagged=flagged)


@dataclass
class VarianceReport:
    j: int
    N: int
    k: int
    Delta: float
    W: float
    variance: float
    exceptional: int
    exceptional_mass: float
    Dj_size: int
    extra: dict = field(default_factory=dict)

    @property
    def holds(self) -> bool:
        return (self.exceptional * math.exp(-1) <= self.exceptional_mass <= self.variance)

    def row(self) -> dict:
        return {"j": self.j, "N": self.N, "k": self.k, "Delta": self.Delta, "W": self.W,
                "variance": self.variance, "exceptional": self.exceptional,
                "exceptional_mass": self.exceptional_mass, "Dj_size": self.Dj_size,
                "holds": self.holds}


def f_values(ctx: MomentContext, Dj: DjSet) -> np.ndarray:
    """F_j(n) at every selected n."""
    if not Dj.members:
        raise ValueError("D_j is empty")
    acc = np.zeros(ctx.idx.shape[0])
    for d in Dj.members:
        acc += math.sqrt(-_disc_for(d, ctx.j)) * ctx.R(d)
    return acc / (math.pi * ctx.gamma * ctx.tau * len(Dj))


def variance_report(ctx: MomentContext, Dj: DjSet) -> VarianceReport:
    F = f_values(ctx, Dj)
    variance = math.fsum((F - 1.0) ** 2 * ctx.weights)
    # exceptional set from the coverage sieve, n <= N only
    bitmap = coverage_bitmap(ctx.N, Dj.members)
    covered = bitmap.to_bool()
    upto = ctx.idx <= ctx.N
    sel = ctx.idx[upto]
    missing = ~covered[sel]
    exceptional = int(missing.sum())
    if exceptional != int((F[upto] == 0).sum()):
        raise ArithmeticError("F_j = 0 disagrees with the coverage sieve")
    mass = math.fsum(ctx.weights[upto][missing])
    return VarianceReport(ctx.j, ctx.N, ctx.k, Dj.Delta, ctx.W, variance, exceptional,
                          mass, len(Dj))
