"""Reversible Hadamard difference sets in ``K x GF(p)^4`` from type-Q pairs.

Given a spread-adapted pair ``(C0, C1)`` with ``s = (p^2+1)/2``::

    C2 = (L_1 u ... u L_s) \\ C0        C3 = (L_{s+1} u ... u L_{2s}) \\ C1
    D0 = lift(C0) u lift(A)            D2 = lift(C2) u lift(A)
    D1 = lift(C1) u lift(B)            D3 = W \\ (lift(C3) u lift(B))

where ``A`` (``B``) is a union of ``(s-1)/2`` lines of the second (first)
half of the spread.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import BadLineSelection, NoAdmissibleLine, ParseError, SizeInvariantViolated
from .geometry import projective_space
from .groupring import GroupContext, GroupSubset, parse_subset, verify_difference_set, verify_reversible
from .textfmt import uint_list
from .typeq import SpreadCertificate
from .verdict import Verdict


@dataclass(frozen=True, eq=False)
class CertifiedSubgroup:
    """A subgroup of W with the block relations it has been checked against."""

    ctx: GroupContext
    elements: np.ndarray  # boolean mask over W
    disjoint_from: tuple[int, ...] = ()
    contained_in: tuple[int, ...] = ()
    name: str = "P"
    line: int | None = None

    @property
    def order(self) -> int:
        return int(self.elements.sum())

    def indices(self) -> np.ndarray:
        return np.flatnonzero(self.elements)

    def to_line(self) -> str:
        digits = len(self.ctx.digit_primes)
        items = []
        if digits:
            for w in self.indices():
                _, coords = self.ctx.coords(int(w))
                items.append(",".join(map(str, coords)))
        rel = ""
        if self.disjoint_from:
            rel += " disjoint=" + ",".join(map(str, self.disjoint_from))
        if self.contained_in:
            rel += " inside=" + ",".join(map(str, self.contained_in))
        return f"{self.name}:{rel} |" + "".join(" " + it for it in items)

    @classmethod
    def from_line(cls, ctx: GroupContext, name: str, rest: str) -> "CertifiedSubgroup":
        """Parse the value of a ``NAME: [disjoint=..] [inside=..] | coords ...`` line."""
        rel, sep, body = rest.partition("|")
        if not sep:
            raise ParseError(f"subgroup line {name} lacks '|' separator")
        if (rel and not rel.endswith(" ")) or (body and not body.startswith(" ")):
            raise ParseError(f"subgroup line {name} needs single spaces around '|'")
        disjoint, inside = (), ()
        for tok in rel[:-1].split(" ") if rel else ():
            key, _, val = tok.partition("=")
            vals = uint_list(val, ",", what="block index")
            if key == "disjoint" and not disjoint:
                disjoint = vals
            elif key == "inside" and not inside:
                inside = vals
            else:
                raise ParseError(f"unknown or repeated subgroup relation {tok!r}")
        if any(not 0 <= i < 4 for i in disjoint + inside):
            raise ParseError(f"subgroup {name} refers to a block outside 0..3")
        mask = np.zeros(ctx.w_order, dtype=bool)
        if not ctx.digit_primes:
            if body:
                raise ParseError(f"subgroup {name} lists coordinates in a trivial group")
            mask[0] = True
        for item in body[1:].split(" ") if body else ():
            coords = uint_list(item, ",", what="coordinate")
            try:
                idx = ctx.element(0, coords)
            except ValueError as exc:
                raise ParseError(f"bad subgroup line {name}: {exc}") from None
            if mask[idx]:
                raise ParseError(f"subgroup {name} repeats element {item}")
            mask[idx] = True
        return cls(ctx, mask, disjoint, inside, name)


def w_is_subgroup(ctx: GroupContext, mask: np.ndarray) -> bool:
    el = np.flatnonzero(mask)
    if el.size == 0 or not mask[0]:
        return False
    if not mask[ctx.w_neg(el)].all():
        return False
    return bool(mask[ctx.w_add(el[:, None], el[None, :])].all())


def verify_subgroup(sub: CertifiedSubgroup, blocks, expected_order: int | None = None) -> Verdict:
    """Closure plus every recorded disjointness/containment relation, checked exhaustively."""
    verdict = Verdict()
    name = sub.name
    verdict.add(f"{name}.closed", w_is_subgroup(sub.ctx, sub.elements), "not closed under addition/negation")
    if expected_order is not None:
        verdict.add(f"{name}.order", sub.order == expected_order, f"order={sub.order} expected={expected_order}")
    for i in sub.disjoint_from:
        hit = np.flatnonzero(sub.elements & blocks[i])
        verdict.add(f"{name}.disjoint(g{i})", hit.size == 0, f"shared element w={hit[0] if hit.size else ''}")
    for i in sub.contained_in:
        miss = np.flatnonzero(sub.elements & ~blocks[i])
        verdict.add(f"{name}.inside(g{i})", miss.size == 0, f"missing element w={miss[0] if miss.size else ''}")
    return verdict


@dataclass(frozen=True, eq=False)
class HdsBlocks:
    ctx: GroupContext
    blocks: tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]
    cert: SpreadCertificate
    a_lines: tuple[int, ...]
    b_lines: tuple[int, ...]
    meta: dict = field(default_factory=dict)

    @property
    def p(self) -> int:
        return self.cert.p

    @property
    def D0(self):
        return self.blocks[0]

    @property
    def D1(self):
        return self.blocks[1]

    @property
    def D2(self):
        return self.blocks[2]

    @property
    def D3(self):
        return self.blocks[3]


def default_line_selection(p: int) -> tuple[tuple[int, ...], tuple[int, ...]]:
    s = (p * p + 1) // 2
    half = (s - 1) // 2
    return tuple(range(s + 1, s + 1 + half)), tuple(range(1, 1 + half))


def block_sizes(p: int) -> tuple[int, int, int, int]:
    small = (p**4 - p**2) // 2
    return (small, small, small, (p**4 + p**2) // 2)


def build_blocks(cert: SpreadCertificate, a_lines=None, b_lines=None) -> HdsBlocks:
    p, s = cert.p, cert.s
    da, db = default_line_selection(p)
    a_lines = tuple(sorted(a_lines)) if a_lines is not None else da
    b_lines = tuple(sorted(b_lines)) if b_lines is not None else db
    half = (s - 1) // 2
    if len(set(a_lines)) != half or not all(s < a <= 2 * s for a in a_lines):
        raise BadLineSelection(f"A must be {half} distinct labels from {s + 1}..{2 * s}, got {a_lines}")
    if len(set(b_lines)) != half or not all(1 <= b <= s for b in b_lines):
        raise BadLineSelection(f"B must be {half} distinct labels from 1..{s}, got {b_lines}")
    space = projective_space(p)
    spread = cert.labeled_spread()
    by_label = {L.label: L for L in spread.lines}
    first = {x for lab in range(1, s + 1) for x in by_label[lab].points}
    second = {x for lab in range(s + 1, 2 * s + 1) for x in by_label[lab].points}
    C0, C1 = set(cert.C0), set(cert.C1)
    C2 = first - C0
    C3 = second - C1
    A = [x for lab in a_lines for x in by_label[lab].points]
    B = [x for lab in b_lines for x in by_label[lab].points]
    lift = space.lift_mask
    D0 = lift(C0) | lift(A)
    D2 = lift(C2) | lift(A)
    D1 = lift(C1) | lift(B)
    D3 = ~(lift(C3) | lift(B))
    blocks = (D0, D1, D2, D3)
    got = tuple(int(b.sum()) for b in blocks)
    want = block_sizes(p)
    if got != want:
        raise SizeInvariantViolated(f"block sizes {got} != {want}; the certificate is not valid")
    for b in blocks:
        b.setflags(write=False)
    return HdsBlocks(GroupContext.for_primes((p,)), blocks, cert, a_lines, b_lines)


def assemble_hds(blocks: HdsBlocks) -> GroupSubset:
    return GroupSubset.from_blocks(blocks.ctx, blocks.blocks)


def hds_parameters(n: int) -> tuple[int, int, int]:
    return (4 * n * n, 2 * n * n - n, n * n - n)


def verify_blocks(blocks: HdsBlocks) -> Verdict:
    """Sizes, negation closure and the forced set algebra of the four blocks."""
    verdict = Verdict()
    ctx = blocks.ctx
    got = tuple(int(b.sum()) for b in blocks.blocks)
    verdict.add("blocks.sizes", got == block_sizes(blocks.p), f"sizes={got} expected={block_sizes(blocks.p)}")
    neg = ctx.w_neg(np.arange(ctx.w_order))
    for i, b in enumerate(blocks.blocks):
        bad = np.flatnonzero(b != b[neg])
        verdict.add(f"blocks.negation(D{i})", bad.size == 0, f"w={bad[0] if bad.size else ''}")
    space = projective_space(blocks.p)
    A = space.lift_mask([x for lab in blocks.a_lines for x in blocks.cert.labeled_spread().lines[lab - 1].points])
    both = blocks.D0 & blocks.D2
    verdict.add("blocks.D0&D2=lift(A)", np.array_equal(both, A), "D0 and D2 overlap outside lift(A)")
    return verdict


def _line_subgroup(cert: SpreadCertificate, label: int) -> np.ndarray:
    space = projective_space(cert.p)
    line = cert.labeled_spread().lines[label - 1]
    mask = space.lift_mask(line.points)
    mask[0] = True
    return mask


def find_P(cert: SpreadCertificate, blocks: HdsBlocks) -> CertifiedSubgroup:
    """``lift(L_a) u {0}`` for the least second-half line ``L_a`` outside ``A``."""
    s = cert.s
    free = [a for a in range(s + 1, 2 * s + 1) if a not in blocks.a_lines]
    if not free:
        raise NoAdmissibleLine("every second-half line is used by A")
    a = free[0]
    P = CertifiedSubgroup(blocks.ctx, _line_subgroup(cert, a), disjoint_from=(0, 2), name="P", line=a)
    check = verify_subgroup(P, blocks.blocks, cert.p**2)
    if not check.ok:
        raise NoAdmissibleLine(f"line {a} fails: {check.witness}")
    return P


def find_Q(cert: SpreadCertificate, blocks: HdsBlocks) -> CertifiedSubgroup:
    """``{0} u lift(L_b)`` for the least first-half line ``L_b`` outside ``B``."""
    s = cert.s
    free = [b for b in range(1, s + 1) if b not in blocks.b_lines]
    if not free:
        raise NoAdmissibleLine("every first-half line is used by B")
    b = free[0]
    Q = CertifiedSubgroup(blocks.ctx, _line_subgroup(cert, b), disjoint_from=(1,), contained_in=(3,), name="Q", line=b)
    check = verify_subgroup(Q, blocks.blocks, cert.p**2)
    if not check.ok:
        raise NoAdmissibleLine(f"line {b} fails: {check.witness}")
    return Q


def verify_hds(S: GroupSubset, n: int, threads: int = 1) -> Verdict:
    v, k, lam = hds_parameters(n)
    verdict = verify_difference_set(S, v, k, lam, threads)
    verdict.add("ds.reversible", verify_reversible(S), "set differs from its inverse")
    return verdict


@dataclass(frozen=True, eq=False)
class HdsBundle:
    """A difference set plus the certificates that travel with it on disk."""

    subset: GroupSubset
    subgroups: dict
    fields: dict

    def to_text(self, comments=()) -> str:
        out = self.subset.to_text(comments)
        for sub in self.subgroups.values():
            out += sub.to_line() + "\n"
        for key, val in self.fields.items():
            out += f"{key}: {val}\n"
        return out

    def save(self, path, comments=()) -> None:
        Path(path).write_text(self.to_text(comments))

    @classmethod
    def from_text(cls, text: str) -> "HdsBundle":
        subset, extra = parse_subset(text)
        subgroups, fields = {}, {}
        for key, val in extra.items():
            if "|" in val:
                subgroups[key] = CertifiedSubgroup.from_line(subset.ctx, key, val)
            else:
                fields[key] = val
        return cls(subset, subgroups, fields)

    @classmethod
    def load(cls, path) -> "HdsBundle":
        return cls.from_text(Path(path).read_text())


def prime_bundle(blocks: HdsBlocks, P: CertifiedSubgroup, Q: CertifiedSubgroup) -> HdsBundle:
    fields = {
        "p": str(blocks.p),
        "A": " ".join(map(str, blocks.a_lines)),
        "B": " ".join(map(str, blocks.b_lines)),
        "labeling": " ".join(map(str, blocks.cert.labeling)),
        "C0": " ".join(map(str, blocks.cert.C0)),
        "C1": " ".join(map(str, blocks.cert.C1)),
    }
    return HdsBundle(assemble_hds(blocks), {"P": P, "Q": Q}, fields)
