"""Table-driven arithmetic in GF(p^4) viewed as the vector space GF(p)^4.

Elements are 4-tuples of residues ``(c0, c1, c2, c3)`` standing for the
polynomial ``c0 + c1 x + c2 x^2 + c3 x^3``; their integer index is the
little-end-first base-``p`` number ``c0 + c1 p + c2 p^2 + c3 p^3``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import NotAnOddPrime

Vec4 = tuple[int, int, int, int]

DEGREE = 4


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


def prime_factors(n: int) -> list[int]:
    """Prime factors of ``n`` with multiplicity, ascending."""
    out = []
    f = 2
    while f * f <= n:
        while n % f == 0:
            out.append(f)
            n //= f
        f += 1
    if n > 1:
        out.append(n)
    return out


def is_prime_power(n: int) -> bool:
    if n < 2:
        return False
    return len(set(prime_factors(n))) == 1


def vec_to_index(v, p: int) -> int:
    return int(v[0] + p * (v[1] + p * (v[2] + p * v[3])))


def index_to_vec(i: int, p: int) -> Vec4:
    c0, i = i % p, i // p
    c1, i = i % p, i // p
    c2, i = i % p, i // p
    return (c0, c1, c2, i % p)


def poly_mulmod(a, b, modulus, p: int) -> Vec4:
    """Multiply two degree<4 polynomials and reduce by ``x^4 + m3 x^3 + ... + m0``."""
    r = [0] * 7
    for i in range(4):
        if a[i]:
            for j in range(4):
                r[i + j] += a[i] * b[j]
    for d in range(6, 3, -1):
        c = r[d] % p
        if c:
            for i in range(4):
                r[d - 4 + i] -= c * modulus[i]
        r[d] = 0
    return tuple(x % p for x in r[:4])


def _has_root(m, p: int) -> bool:
    return any((m[0] + m[1] * x + m[2] * x * x + m[3] * x**3 + x**4) % p == 0 for x in range(p))


def _has_quadratic_factor(m, p: int) -> bool:
    for b0 in range(p):
        for b1 in range(p):
            r = list(m) + [1]
            for d in (4, 3, 2):
                c = r[d]
                r[d] = 0
                r[d - 1] = (r[d - 1] - c * b1) % p
                r[d - 2] = (r[d - 2] - c * b0) % p
            if r[0] == 0 and r[1] == 0:
                return True
    return False


def is_irreducible_quartic(m, p: int) -> bool:
    """Irreducibility of the monic quartic with low coefficients ``m`` (constant first)."""
    return not _has_root(m, p) and not _has_quadratic_factor(m, p)


@dataclass(frozen=True, eq=False)
class FieldTable:
    """GF(p^4) with full exp/log tables.

    ``exp_table[e]`` is the index of ``g^e`` for the primitive element ``g``;
    ``log_table[i]`` inverts it, with ``log_table[0] == -1``.
    """

    p: int
    modulus: tuple[int, int, int, int]
    generator: Vec4
    exp_table: np.ndarray
    log_table: np.ndarray
    degree: int = DEGREE

    @property
    def size(self) -> int:
        return self.p**4

    @property
    def order(self) -> int:
        """Order of the multiplicative group."""
        return self.p**4 - 1

    @property
    def subfield_step(self) -> int:
        return self.p**2 + 1

    def index(self, v) -> int:
        return vec_to_index(v, self.p)

    def vec(self, i: int) -> Vec4:
        return index_to_vec(int(i), self.p)

    def exp(self, e: int) -> Vec4:
        return self.vec(self.exp_table[e % self.order])

    def log(self, v) -> int:
        e = int(self.log_table[self.index(v)])
        if e < 0:
            raise ZeroDivisionError("log of zero")
        return e

    def in_subfield(self, v) -> bool:
        e = int(self.log_table[self.index(v)])
        return e < 0 or e % self.subfield_step == 0


def _element_order(v, modulus, p: int, limit: int) -> int:
    one = (1, 0, 0, 0)
    x = tuple(v)
    e = 1
    while x != one:
        x = poly_mulmod(x, v, modulus, p)
        e += 1
        if e > limit:
            raise ArithmeticError("element order exceeds group order; modulus not irreducible")
    return e


@lru_cache(maxsize=None)
def build_field(p: int) -> FieldTable:
    if not isinstance(p, int) or p == 2 or not is_prime(p):
        raise NotAnOddPrime(f"{p!r} is not an odd prime")
    modulus = next(m for m in itertools.product(range(p), repeat=4) if is_irreducible_quartic(m, p))
    order = p**4 - 1
    generator = None
    for i in range(2, p**4):
        v = index_to_vec(i, p)
        if _element_order(v, modulus, p, order) == order:
            generator = v
            break
    exp_table = np.empty(order, dtype=np.int64)
    log_table = np.full(p**4, -1, dtype=np.int64)
    x = (1, 0, 0, 0)
    for e in range(order):
        idx = vec_to_index(x, p)
        exp_table[e] = idx
        log_table[idx] = e
        x = poly_mulmod(x, generator, modulus, p)
    exp_table.setflags(write=False)
    log_table.setflags(write=False)
    return FieldTable(p, tuple(modulus), generator, exp_table, log_table)


def field_mul(t: FieldTable, x, y) -> Vec4:
    lx = t.log_table[t.index(x)]
    ly = t.log_table[t.index(y)]
    if lx < 0 or ly < 0:
        return (0, 0, 0, 0)
    return t.vec(t.exp_table[(lx + ly) % t.order])


def field_pow(t: FieldTable, x, k: int) -> Vec4:
    lx = t.log_table[t.index(x)]
    if lx < 0:
        return (0, 0, 0, 0) if k > 0 else (1, 0, 0, 0)
    return t.vec(t.exp_table[(int(lx) * k) % t.order])


def field_add(t: FieldTable, x, y) -> Vec4:
    p = t.p
    return tuple((a + b) % p for a, b in zip(x, y))


def subfield_elements(t: FieldTable) -> frozenset:
    """The copy of GF(p^2) inside GF(p^4)."""
    step = t.subfield_step
    out = {(0, 0, 0, 0)}
    out.update(t.vec(t.exp_table[k * step]) for k in range(t.order // step))
    return frozenset(out)
