"""Subsets of ``K x W`` and exact difference-set verification.

``K`` is the Klein four group, encoded as 2-bit integers under XOR
(``g1 = 1``, ``g2 = 2``, ``g3 = 3``), and ``W`` is a product of elementary
abelian groups ``Z_p^e``.  Elements are enumerated Klein index major, then
mixed radix over the W coordinates, least significant coordinate first.
"""

from __future__ import annotations

import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import ParseError, SizeMismatch
from .textfmt import field_value, split_lines, uint, uint_list
from .verdict import Verdict

KLEIN_ORDER = 4
# largest factor order for which a dense subtraction table is kept
_TABLE_LIMIT = 2401


@dataclass(frozen=True)
class GroupContext:
    w_factors: tuple[tuple[int, int], ...]

    def __post_init__(self):
        object.__setattr__(self, "w_factors", tuple((int(p), int(e)) for p, e in self.w_factors))

    @classmethod
    def for_primes(cls, primes) -> "GroupContext":
        return cls(tuple((p, 4) for p in primes))

    @cached_property
    def digit_primes(self) -> tuple[int, ...]:
        return tuple(p for p, e in self.w_factors for _ in range(e))

    @cached_property
    def factor_orders(self) -> tuple[int, ...]:
        return tuple(p**e for p, e in self.w_factors)

    @cached_property
    def w_order(self) -> int:
        return int(np.prod(self.factor_orders, dtype=object)) if self.w_factors else 1

    @property
    def total_order(self) -> int:
        return KLEIN_ORDER * self.w_order

    @cached_property
    def _factor_weights(self) -> tuple[int, ...]:
        out, w = [], 1
        for f in self.factor_orders:
            out.append(w)
            w *= f
        return tuple(out)

    def header(self) -> str:
        w = "x".join(f"{p}^{e}" for p, e in self.w_factors) or "1"
        return f"GSET v1 klein=4 w={w}"

    # element encoding

    def element(self, klein: int, coords=()) -> int:
        coords = list(coords)
        if len(coords) != len(self.digit_primes):
            raise ValueError(f"expected {len(self.digit_primes)} W coordinates, got {len(coords)}")
        w, weight = 0, 1
        for c, p in zip(coords, self.digit_primes):
            if not 0 <= c < p:
                raise ValueError(f"coordinate {c} out of range for Z_{p}")
            w += c * weight
            weight *= p
        if not 0 <= klein < 4:
            raise ValueError("klein index must be 0..3")
        return klein * self.w_order + w

    def coords(self, idx: int) -> tuple[int, tuple[int, ...]]:
        klein, w = divmod(int(idx), self.w_order)
        out = []
        for p in self.digit_primes:
            w, c = divmod(w, p)
            out.append(c)
        return klein, tuple(out)

    # arithmetic on arrays of W indices

    def _w_digits(self, w: np.ndarray) -> list[np.ndarray]:
        out = []
        for p in self.digit_primes:
            out.append(w % p)
            w = w // p
        return out

    def _w_from_digits(self, digits) -> np.ndarray:
        w = np.zeros_like(digits[0]) if digits else np.int64(0)
        weight = 1
        for d, p in zip(digits, self.digit_primes):
            w = w + d * weight
            weight *= p
        return w

    def w_add(self, a, b, sign: int = 1) -> np.ndarray:
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        da, db = self._w_digits(a), self._w_digits(b)
        return self._w_from_digits([(x + sign * y) % p for x, y, p in zip(da, db, self.digit_primes)])

    def w_neg(self, a) -> np.ndarray:
        a = np.asarray(a, dtype=np.int64)
        return self._w_from_digits([(-x) % p for x, p in zip(self._w_digits(a), self.digit_primes)])

    def add(self, a, b) -> np.ndarray:
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        ka, wa = np.divmod(a, self.w_order)
        kb, wb = np.divmod(b, self.w_order)
        return (ka ^ kb) * self.w_order + self.w_add(wa, wb)

    def sub(self, a, b) -> np.ndarray:
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        ka, wa = np.divmod(a, self.w_order)
        kb, wb = np.divmod(b, self.w_order)
        return (ka ^ kb) * self.w_order + self.w_add(wa, wb, -1)

    def neg(self, a) -> np.ndarray:
        a = np.asarray(a, dtype=np.int64)
        k, w = np.divmod(a, self.w_order)
        return k * self.w_order + self.w_neg(w)

    @cached_property
    def _sub_tables(self):
        """Per W factor: dense ``a - b`` table, or ``None`` when too large."""
        tables = []
        for (p, e), f in zip(self.w_factors, self.factor_orders):
            if f > _TABLE_LIMIT:
                tables.append(None)
                continue
            sub = GroupContext(((p, e),))
            a = np.arange(f)
            tab = sub.w_add(a[:, None], a[None, :], -1).astype(np.int32)
            tables.append(tab)
        return tables

    def split(self, idx: np.ndarray):
        """Decompose element indices into (klein, per-factor W indices)."""
        k, w = np.divmod(np.asarray(idx, dtype=np.int64), self.w_order)
        parts = []
        for f in self.factor_orders:
            w, r = np.divmod(w, f)
            parts.append(r)
        return k, parts

    def sub_outer(self, a_split, b_split) -> np.ndarray:
        """Matrix of ``a_i - b_j`` for pre-split element arrays."""
        ka, pa = a_split
        kb, pb = b_split
        out = (ka[:, None] ^ kb[None, :]) * self.w_order
        for (p, e), tab, weight, x, y in zip(self.w_factors, self._sub_tables, self._factor_weights, pa, pb):
            if tab is not None:
                out += tab[x[:, None], y[None, :]].astype(np.int64) * weight
            else:
                sub = GroupContext(((p, e),))
                out += sub.w_add(x[:, None], y[None, :], -1) * weight
        return out

    def identity(self) -> int:
        return 0

    def all_elements(self) -> np.ndarray:
        return np.arange(self.total_order, dtype=np.int64)


@dataclass(frozen=True, eq=False)
class GroupSubset:
    ctx: GroupContext
    mask: np.ndarray

    def __post_init__(self):
        mask = np.asarray(self.mask, dtype=bool)
        if mask.shape != (self.ctx.total_order,):
            raise ValueError(f"membership length {mask.shape} != group order {self.ctx.total_order}")
        mask = mask.copy()
        mask.setflags(write=False)
        object.__setattr__(self, "mask", mask)

    @classmethod
    def from_elements(cls, ctx: GroupContext, elements) -> "GroupSubset":
        mask = np.zeros(ctx.total_order, dtype=bool)
        idx = np.fromiter(elements, dtype=np.int64)
        mask[idx] = True
        return cls(ctx, mask)

    @classmethod
    def from_blocks(cls, ctx: GroupContext, blocks) -> "GroupSubset":
        """``(g_0, D_0) u (g_1, D_1) u (g_2, D_2) u (g_3, D_3)`` from four W masks."""
        return cls(ctx, np.concatenate([np.asarray(b, dtype=bool) for b in blocks]))

    @property
    def size(self) -> int:
        return int(self.mask.sum())

    def __len__(self) -> int:
        return self.size

    def __eq__(self, other) -> bool:
        return isinstance(other, GroupSubset) and self.ctx == other.ctx and np.array_equal(self.mask, other.mask)

    def __hash__(self):
        return hash((self.ctx, self.mask.tobytes()))

    def elements(self) -> np.ndarray:
        return np.flatnonzero(self.mask)

    def block(self, klein: int) -> np.ndarray:
        w = self.ctx.w_order
        return self.mask[klein * w : (klein + 1) * w]

    def blocks(self) -> tuple[np.ndarray, ...]:
        return tuple(self.block(i) for i in range(4))

    def __contains__(self, idx) -> bool:
        return bool(self.mask[int(idx)])

    def intersection(self, other: "GroupSubset") -> "GroupSubset":
        return GroupSubset(self.ctx, self.mask & other.mask)

    def to_text(self, comments=()) -> str:
        lines = [self.ctx.header()]
        lines += [f"# {c}" for c in comments]
        for idx in self.elements():
            k, coords = self.ctx.coords(idx)
            lines.append(f"{k};{','.join(map(str, coords))}")
        return "\n".join(lines) + "\n"


_HEADER = re.compile(r"^GSET v1 klein=4 w=(.+)$")


def parse_header(line: str, lineno: int = 1) -> GroupContext:
    m = _HEADER.match(line)
    if not m:
        raise ParseError("missing 'GSET v1 klein=4 w=...' header", lineno)
    wtext = m.group(1)
    if wtext == "1":
        return GroupContext(())
    factors = []
    for part in wtext.split("x"):
        base, sep, exp = part.partition("^")
        if not sep:
            raise ParseError(f"bad factor {part!r} in header", lineno)
        factors.append((uint(base, lineno, "factor"), uint(exp, lineno, "exponent")))
    return GroupContext(tuple(factors))


def parse_member(ctx: GroupContext, row: str, lineno: int) -> int:
    klein, sep, rest = row.partition(";")
    coords = list(uint_list(rest, ",", lineno, "coordinate"))
    try:
        return ctx.element(uint(klein, lineno, "klein index"), coords)
    except ValueError as exc:
        raise ParseError(f"bad member {row!r}: {exc}", lineno) from None


def parse_subset(text: str):
    """Parse a subset file; returns ``(subset, extra)`` with unparsed ``KEY: ...`` lines in ``extra``."""
    rows = split_lines(text)
    if not rows:
        raise ParseError("empty file", 1)
    ctx = parse_header(rows[0])
    members = []
    extra: dict[str, str] = {}
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or row.startswith("#"):
            continue
        if ";" in row:
            members.append(parse_member(ctx, row, lineno))
            continue
        key, sep, rest = row.partition(":")
        if not sep or not key or key != key.strip():
            raise ParseError(f"unexpected line {row[:40]!r}", lineno)
        if key in extra:
            raise ParseError(f"duplicate field {key}", lineno)
        extra[key] = field_value(rest, lineno)
    if len(set(members)) != len(members):
        raise ParseError("duplicate member")
    return GroupSubset.from_elements(ctx, members), extra


def load_subset(path):
    return parse_subset(Path(path).read_text())


def difference_counts(S: GroupSubset, threads: int = 1, chunk: int | None = None) -> np.ndarray:
    """Multiplicity of every group element among ``d1 - d2`` over ordered pairs of distinct members."""
    ctx = S.ctx
    elems = S.elements()
    k = elems.size
    v = ctx.total_order
    if k == 0:
        return np.zeros(v, dtype=np.int64)
    if chunk is None:
        chunk = max(1, min(k, 4_000_000 // k))
    right = ctx.split(elems)

    def work(start):
        stop = min(k, start + chunk)
        left = ctx.split(elems[start:stop])
        diffs = ctx.sub_outer(left, right)
        return np.bincount(diffs.ravel(), minlength=v)

    starts = range(0, k, chunk)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, starts))
    else:
        parts = [work(s) for s in starts]
    counts = np.sum(parts, axis=0, dtype=np.int64)
    counts[ctx.identity()] -= k
    return counts


def verify_difference_set(S: GroupSubset, v: int, k: int, lam: int, threads: int = 1) -> Verdict:
    """Accept iff every nonidentity element is a difference of members exactly ``lam`` times.

    Raises :class:`SizeMismatch` when ``|S| != k``.
    """
    ctx = S.ctx
    verdict = Verdict()
    if not verdict.add("ds.order", v == ctx.total_order, f"group order {ctx.total_order} != v={v}"):
        return verdict
    if S.size != k:
        raise SizeMismatch(k, S.size)
    counts = difference_counts(S, threads)
    verdict.add("ds.conservation", int(counts.sum()) == k * (k - 1), f"total={int(counts.sum())} expected={k * (k - 1)}")
    counts[ctx.identity()] = lam
    bad = np.flatnonzero(counts != lam)
    witness = ""
    if bad.size:
        z = int(bad[0])
        kl, coords = ctx.coords(z)
        witness = f"element={kl};{','.join(map(str, coords))} count={int(counts[z])} expected={lam}"
    verdict.add(f"ds.parameters({v},{k},{lam})", bad.size == 0, witness)
    return verdict


def verify_reversible(S: GroupSubset) -> bool:
    inv = S.ctx.neg(S.ctx.all_elements())
    return bool(np.array_equal(S.mask, S.mask[inv]))


def reversible_witness(S: GroupSubset) -> int | None:
    inv = S.ctx.neg(S.ctx.all_elements())
    bad = np.flatnonzero(S.mask != S.mask[inv])
    return int(bad[0]) if bad.size else None


def translate(S: GroupSubset, g: int) -> GroupSubset:
    """``{g + s : s in S}``."""
    ctx = S.ctx
    src = ctx.sub(ctx.all_elements(), np.int64(g))
    return GroupSubset(ctx, S.mask[src])


def subgroup_span(ctx: GroupContext, generators) -> GroupSubset:
    """Subgroup generated by ``generators``, checked closed and inverse-closed."""
    gens = np.unique(np.fromiter(generators, dtype=np.int64))
    mask = np.zeros(ctx.total_order, dtype=bool)
    mask[ctx.identity()] = True
    frontier = np.array([ctx.identity()], dtype=np.int64)
    while frontier.size and gens.size:
        nxt = ctx.add(frontier[:, None], gens[None, :]).ravel()
        nxt = np.unique(nxt[~mask[nxt]])
        mask[nxt] = True
        frontier = nxt
    H = GroupSubset(ctx, mask)
    if not is_subgroup(H):
        raise AssertionError("span is not closed")
    return H


def is_subgroup(H: GroupSubset) -> bool:
    ctx = H.ctx
    el = H.elements()
    if not H.mask[ctx.identity()]:
        return False
    if not H.mask[ctx.neg(el)].all():
        return False
    sums = ctx.add(el[:, None], el[None, :])
    return bool(H.mask[sums].all())
