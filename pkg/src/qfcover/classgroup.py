"""Class groups of imaginary quadratic fields and their characters.

Characters are stored exactly: a character psi of a group of exponent L is a
tuple of integers k_C with psi(C) = exp(2 pi i k_C / L).  Complex numbers only
appear when a value is finally summed.
"""

from __future__ import annotations

import cmath
import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .arith import assoc_discriminant, is_fundamental, is_prime, kronecker
from .quadforms import QuadForm, enumerate_reduced, rep_count, rep_counts_upto


def _xgcd(a: int, b: int) -> tuple[int, int, int]:
    """(g, u, v) with u a + v b = g = gcd(a, b)."""
    u0, v0, u1, v1 = 1, 0, 0, 1
    while b:
        q, r = divmod(a, b)
        a, b = b, r
        u0, u1 = u1, u0 - q * u1
        v0, v1 = v1, v0 - q * v1
    return a, u0, v0


def compose(f: QuadForm, g: QuadForm) -> QuadForm:
    """Reduced Dirichlet composite of two primitive forms of equal discriminant."""
    D = f.disc
    if g.disc != D:
        raise ValueError(f"discriminants differ: {D} vs {g.disc}")
    a1, b1, _ = f
    a2, b2, c2 = g
    if a1 > a2:
        a1, b1, _, a2, b2, c2 = a2, b2, c2, a1, b1, f.c
    s = (b1 + b2) // 2
    n = b2 - s
    if a2 % a1 == 0:
        y1, d = 0, a1
    else:
        d, u, _ = _xgcd(a2, a1)
        y1 = u
    if s % d == 0:
        y2, x2, d1 = -1, 0, d
    else:
        d1, x2, y2 = _xgcd(s, d)
        y2 = -y2
    v1 = a1 // d1
    v2 = a2 // d1
    r = (y1 * y2 * n - x2 * c2) % v1
    b3 = b2 + 2 * v2 * r
    a3 = v1 * v2
    c3 = (b3 * b3 - D) // (4 * a3)
    return QuadForm(a3, b3, c3).reduce()


@dataclass(frozen=True, eq=False)
class ClassGroup:
    """Form class group of a negative fundamental discriminant.

    ``coords[i]`` expresses class i in the cyclic basis ``gens`` whose
    orders are ``gen_orders``; ``exponent`` is their lcm.
    """

    D: int
    classes: tuple[QuadForm, ...]
    h: int
    w: int
    mul: np.ndarray
    orders: tuple[int, ...]
    gens: tuple[int, ...]
    gen_orders: tuple[int, ...]
    coords: tuple[tuple[int, ...], ...]
    exponent: int
    index: dict = field(repr=False)
    _count_cache: dict = field(default_factory=dict, repr=False)

    def inverse(self, i: int) -> int:
        return self.index[self.classes[i].inverse()]

    def power(self, i: int, e: int) -> int:
        r = 0
        for _ in range(e % self.orders[i]):
            r = int(self.mul[r, i])
        return r

    def is_cyclic(self) -> bool:
        return len(self.gens) <= 1

    def ideal_counts_upto(self, X: int) -> np.ndarray:
        """Array (h, X+1): ideals of norm n in each class, via form representation counts."""
        cached = self._count_cache.get("table")
        if cached is not None and cached.shape[1] > X:
            return cached[:, : X + 1]
        reps = np.vstack([rep_counts_upto(f, X) for f in self.classes])
        if np.any(reps % self.w):
            raise ArithmeticError(f"representation counts for D={self.D} not divisible by w={self.w}")
        table = reps // self.w
        table.flags.writeable = False
        self._count_cache["table"] = table
        return table

    def ideal_counts(self, n: int) -> np.ndarray:
        cached = self._count_cache.get("table")
        if cached is not None and cached.shape[1] > n:
            return cached[:, n]
        reps = np.array([rep_count(f, n) for f in self.classes], dtype=np.int64)
        if np.any(reps % self.w):
            raise ArithmeticError(f"representation counts for D={self.D} not divisible by w={self.w}")
        return reps // self.w


def _cyclic_basis(h: int, mul: np.ndarray, orders: list[int]):
    """Greedy decomposition into a direct product of cyclic groups.

    Each step takes a coset of maximal order m modulo the subgroup built so
    far and lifts it to an element of order exactly m; such a lift always
    exists because the subgroup is a direct summand.
    """
    coords: dict[int, tuple[int, ...]] = {0: ()}
    gens: list[int] = []
    gen_orders: list[int] = []
    while len(coords) < h:
        best = None
        for x in range(h):
            if x in coords:
                continue
            m, y = 1, x
            while y not in coords:
                y = int(mul[y, x])
                m += 1
            if best is None or m > best[0]:
                best = (m, x)
        m = best[0]
        lift = None
        for x in range(h):
            if x in coords:
                continue
            for z in coords:
                cand = int(mul[x, z])
                if orders[cand] == m:
                    # order m and coset order m means <cand> meets the subgroup trivially
                    y, k = cand, 1
                    while y not in coords:
                        y = int(mul[y, cand])
                        k += 1
                    if k == m:
                        lift = cand
                        break
            if lift is not None:
                break
        if lift is None:
            raise ArithmeticError("failed to split off a cyclic factor")
        new = {}
        p = 0
        for e in range(m):
            for elem, c in coords.items():
                new[int(mul[elem, p])] = c + (e,)
            p = int(mul[p, lift])
        coords = {k: v + (0,) * (len(gens) + 1 - len(v)) for k, v in new.items()}
        gens.append(lift)
        gen_orders.append(m)
    return gens, gen_orders, [coords[i] for i in range(h)]


@lru_cache(maxsize=256)
def build_class_group(D: int) -> ClassGroup:
    if D > -3 or not is_fundamental(D):
        raise ValueError(f"{D} is not a negative fundamental discriminant")
    forms, h = enumerate_reduced(D)
    index = {f: i for i, f in enumerate(forms)}
    mul = np.empty((h, h), dtype=np.int64)
    for i in range(h):
        for j in range(i, h):
            k = index[compose(forms[i], forms[j])]
            mul[i, j] = mul[j, i] = k
    ident = np.arange(h)
    if not (np.array_equal(mul[0], ident)):
        raise ArithmeticError(f"principal form is not the identity for D={D}")
    for i in range(h):
        if len(set(mul[i].tolist())) != h:
            raise ArithmeticError(f"composition table row {i} is not a permutation (D={D})")
    orders = []
    for i in range(h):
        m, y = 1, i
        while y != 0:
            y = int(mul[y, i])
            m += 1
        if h % m:
            raise ArithmeticError(f"order {m} does not divide h={h}")
        orders.append(m)
    gens, gen_orders, coords = _cyclic_basis(h, mul, orders)
    for g in gens:
        # associativity against the generators suffices for the character construction
        if not np.array_equal(mul[mul[:, :], g], mul[:, mul[:, g]]):
            raise ArithmeticError(f"composition not associative for D={D}")
    mul.flags.writeable = False
    exponent = math.lcm(*gen_orders) if gen_orders else 1
    w = {-3: 6, -4: 4}.get(D, 2)
    return ClassGroup(D, tuple(forms), h, w, mul, tuple(orders), tuple(gens),
                      tuple(gen_orders), tuple(coords), exponent, index)


@dataclass(frozen=True)
class ClassCharacter:
    """psi(C_i) = exp(2 pi i k[i] / modulus)."""

    k: tuple[int, ...]
    modulus: int
    label: int = -1

    @property
    def values(self) -> np.ndarray:
        return np.exp(2j * np.pi * np.array(self.k) / self.modulus)

    def __call__(self, i: int) -> complex:
        return cmath.exp(2j * cmath.pi * self.k[i] / self.modulus)

    @property
    def is_real(self) -> bool:
        return all((2 * k) % self.modulus == 0 for k in self.k)

    @property
    def is_principal(self) -> bool:
        return not any(self.k)

    def conj(self) -> "ClassCharacter":
        return ClassCharacter(tuple((-k) % self.modulus for k in self.k), self.modulus)

    def __mul__(self, other: "ClassCharacter") -> "ClassCharacter":
        if other.modulus != self.modulus or len(other.k) != len(self.k):
            raise ValueError("characters of different groups")
        return ClassCharacter(tuple((a + b) % self.modulus for a, b in zip(self.k, other.k)),
                              self.modulus)

    def __pow__(self, e: int) -> "ClassCharacter":
        return ClassCharacter(tuple((e * k) % self.modulus for k in self.k), self.modulus)

    def same(self, other: "ClassCharacter") -> bool:
        return self.k == other.k and self.modulus == other.modulus


def characters(G: ClassGroup) -> list[ClassCharacter]:
    """All h characters of G, principal first."""
    L = G.exponent
    out = []
    for label, t in enumerate(itertools.product(*(range(m) for m in G.gen_orders))):
        ks = tuple(
            sum(ti * ei * (L // mi) for ti, ei, mi in zip(t, e, G.gen_orders)) % L
            for e in G.coords
        )
        out.append(ClassCharacter(ks, L, label))
    return out


def character_matrix(G: ClassGroup, chars: list[ClassCharacter] | None = None) -> np.ndarray:
    chars = characters(G) if chars is None else chars
    return np.array([c.values for c in chars])


def r_coeff_exact(n: int, psi: ClassCharacter, G: ClassGroup) -> tuple[int, ...]:
    """r(n, psi) as an element of Z[x]/(x^L - 1): coefficient of each L-th root of unity."""
    counts = G.ideal_counts(n)
    coef = [0] * psi.modulus
    for i, cnt in enumerate(counts):
        if cnt:
            coef[psi.k[i]] += int(cnt)
    return tuple(coef)


def ring_value(coef: tuple[int, ...]) -> complex:
    L = len(coef)
    return sum(c * cmath.exp(2j * cmath.pi * k / L) for k, c in enumerate(coef) if c)


def ring_mul(u: tuple[int, ...], v: tuple[int, ...]) -> tuple[int, ...]:
    L = len(u)
    out = [0] * L
    for i, a in enumerate(u):
        if a:
            for j, b in enumerate(v):
                if b:
                    out[(i + j) % L] += a * b
    return tuple(out)


def ring_add(*terms: tuple[int, ...]) -> tuple[int, ...]:
    return tuple(sum(t) for t in zip(*terms))


def ring_const(c: int, L: int) -> tuple[int, ...]:
    return (c,) + (0,) * (L - 1)


def r_coeff(n: int, psi: ClassCharacter, G: ClassGroup) -> complex:
    """Sum of psi over the ideals of norm n."""
    counts = G.ideal_counts(n)
    return complex(np.dot(psi.values, counts))


def r_table(G: ClassGroup, X: int, chars: list[ClassCharacter] | None = None) -> np.ndarray:
    """Complex array (#chars, X+1) of r(n, psi)."""
    return character_matrix(G, chars) @ G.ideal_counts_upto(X)


def _round_checked(v: np.ndarray, what: str) -> np.ndarray:
    r = np.rint(v.real)
    bad = np.abs(v - r) > 1e-6
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise ArithmeticError(f"{what}: value {v.flat[i]} not within 1e-6 of an integer")
    return r.astype(np.int64)


def R_D(n: int, G: ClassGroup) -> int:
    """Principal ideals of norm n, reconstructed from all class characters."""
    total = sum(r_coeff(n, psi, G) for psi in characters(G))
    return int(_round_checked(np.array([total / G.h]), f"R_D({n}), D={G.D}")[0])


def R_table(G: ClassGroup, X: int) -> np.ndarray:
    """R_D(n) for n = 0..X through the character sum."""
    return _round_checked(r_table(G, X).sum(axis=0) / G.h, f"R_D table, D={G.D}")


def genus_characters(d: int) -> list[ClassCharacter]:
    """Real class-group characters of Q(sqrt(-d)) for an odd prime d.

    For d = 1 (mod 4) the nontrivial one is built from its defining rule
    psi_1(C) = chi_{-4}(m) for any odd m coprime to d represented by the form
    of C, then matched against the full character list.
    """
    if d % 2 == 0 or not is_prime(d):
        raise ValueError(f"d={d} must be an odd prime")
    G = build_class_group(assoc_discriminant(d).D)
    chars = characters(G)
    if d % 4 == 3:
        return [chars[0]]
    half = G.exponent // 2
    ks = []
    for f in G.classes:
        m = _small_represented(f, lambda v: v % 2 == 1 and v % d != 0)
        ks.append(0 if kronecker(-4, m) == 1 else half)
    psi1 = ClassCharacter(tuple(ks), G.exponent)
    for c in chars[1:]:
        if c.same(psi1):
            return [chars[0], c]
    raise ArithmeticError(f"genus character for d={d} is not a class-group character")


def _small_represented(f: QuadForm, ok) -> int:
    bound = 8
    while True:
        vals = sorted(
            v for x in range(-bound, bound + 1) for y in range(-bound, bound + 1)
            if (v := f(x, y)) > 0 and math.gcd(x, y) == 1 and ok(v)
        )
        if vals:
            return vals[0]
        bound *= 2
