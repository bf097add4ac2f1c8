"""Positive definite binary quadratic forms a x^2 + b xy + c y^2.

Representation counts here are computed by direct lattice enumeration so
they can serve as an oracle for anything ideal-theoretic.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np
from numba import njit

from .arith import is_fundamental


class QuadForm(NamedTuple):
    a: int
    b: int
    c: int

    @property
    def disc(self) -> int:
        return self.b * self.b - 4 * self.a * self.c

    def __call__(self, x: int, y: int) -> int:
        return self.a * x * x + self.b * x * y + self.c * y * y

    def is_primitive(self) -> bool:
        return math.gcd(math.gcd(self.a, self.b), self.c) == 1

    def is_reduced(self) -> bool:
        a, b, c = self
        if not (abs(b) <= a <= c):
            return False
        if (abs(b) == a or a == c) and b < 0:
            return False
        return True

    def inverse(self) -> "QuadForm":
        return QuadForm(self.a, -self.b, self.c).reduce()

    def reduce(self) -> "QuadForm":
        """Reduced form properly equivalent to this one."""
        a, b, c = self
        if a <= 0 or b * b - 4 * a * c >= 0:
            raise ValueError(f"{tuple(self)} is not positive definite")
        while True:
            # normalize b into (-a, a]
            if not (-a < b <= a):
                r = (a - b) // (2 * a)
                b, c = b + 2 * r * a, a * r * r + b * r + c
            if a > c or (a == c and b < 0):
                a, b, c = c, -b, a
                continue
            return QuadForm(a, b, c)


def principal_form(D: int) -> QuadForm:
    if D >= 0 or D % 4 not in (0, 1):
        raise ValueError(f"{D} is not a negative discriminant")
    if D % 4 == 0:
        return QuadForm(1, 0, -D // 4)
    return QuadForm(1, 1, (1 - D) // 4)


def _class_order_key(f: QuadForm):
    # a form and its inverse (a, -b, c) sit next to each other, positive b first
    return (f.a, abs(f.b), f.b < 0)


def enumerate_reduced(D: int) -> tuple[list[QuadForm], int]:
    """All reduced forms of fundamental discriminant D < 0, principal first.

    Returns the list together with the class number h = len(list).
    """
    if D > -3 or not is_fundamental(D):
        raise ValueError(f"{D} is not a negative fundamental discriminant")
    forms = []
    amax = math.isqrt(-D // 3)
    for a in range(1, amax + 1):
        for b in range(-a + 1, a + 1):
            if (b - D) % 2:
                continue
            num = b * b - D
            if num % (4 * a):
                continue
            c = num // (4 * a)
            if c < a or (c == a and b < 0):
                continue
            f = QuadForm(a, b, c)
            if f.is_primitive():
                forms.append(f)
    forms.sort(key=_class_order_key)
    return forms, len(forms)


def class_number(D: int) -> int:
    return enumerate_reduced(D)[1]


def rep_count(f: QuadForm, n: int) -> int:
    """Number of integer pairs (x, y) with f(x, y) = n."""
    if n < 1:
        raise ValueError("n must be positive")
    a, b, c = f
    absD = -f.disc
    if absD <= 0 or a <= 0:
        raise ValueError("form must be positive definite")
    count = 0
    ymax = math.isqrt(4 * a * n // absD)
    for y in range(-ymax, ymax + 1):
        # a x^2 + (b y) x + (c y^2 - n) = 0
        disc = 4 * a * n - absD * y * y
        if disc < 0:
            continue
        s = math.isqrt(disc)
        if s * s != disc:
            continue
        for num in {-b * y + s, -b * y - s}:
            if num % (2 * a) == 0:
                count += 1
    return count


@njit(cache=True, nogil=True)
def _lattice_counts(a, b, c, X, out):
    absD = 4 * a * c - b * b
    ymax = int(math.sqrt(4.0 * a * X / absD)) + 1
    for y in range(-ymax, ymax + 1):
        rad = 4.0 * a * X - absD * y * y
        if rad < 0:
            continue
        s = math.sqrt(rad)
        xlo = int(math.floor((-b * y - s) / (2 * a))) - 1
        xhi = int(math.ceil((-b * y + s) / (2 * a))) + 1
        for x in range(xlo, xhi + 1):
            v = a * x * x + b * x * y + c * y * y
            if 0 < v <= X:
                out[v] += 1


def rep_counts_upto(f: QuadForm, X: int, dtype=np.int64) -> np.ndarray:
    """Array r with r[n] = rep_count(f, n) for 0 < n <= X (r[0] = 0)."""
    out = np.zeros(X + 1, dtype=dtype)
    _lattice_counts(int(f.a), int(f.b), int(f.c), int(X), out)
    return out


def principal_rep_count(d: int, n: int) -> int:
    """Number of integer pairs (x, y) with x^2 + d y^2 = n."""
    if d < 1 or n < 1:
        raise ValueError("d and n must be positive")
    count = 0
    y = 0
    while d * y * y <= n:
        r = n - d * y * y
        x = math.isqrt(r)
        if x * x == r:
            count += (1 if x == 0 else 2) * (1 if y == 0 else 2)
        y += 1
    return count


def principal_rep_counts_upto(d: int, X: int) -> np.ndarray:
    return rep_counts_upto(QuadForm(1, 0, d), X)
