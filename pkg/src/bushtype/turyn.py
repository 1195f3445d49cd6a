"""Product composition of reversible Hadamard difference sets over ``K x W``.

For subsets ``A, B`` of ``W1`` and ``C, D`` of ``W2``::

    nabla(A, B; C, D) = (A&B) x C'  u  (A'&B') x C  u  (A&B') x D'  u  (A'&B) x D

(primes are complements).  Composing ``E1 = u (g_i, A_i)`` with
``E2 = u (g_i, B_i)`` gives::

    g0: nabla(A0, A1; B0, B1)      g1: nabla(A0, A1; B2, B3)
    g2: nabla(A2, A3; B0, B1)      g3: nabla(A2, A3; B2, B3)

W coordinates of a composite list the running (``E2``) factors first and the
fresh (``E1``) factors after them, so the oldest factor is least significant.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .algebra import prime_factors
from .errors import CertificateMismatch, FactorizationError, MixedGroups, SizeInvariantViolated
from .groupring import GroupContext, GroupSubset
from .hds import CertifiedSubgroup, HdsBlocks, assemble_hds, build_blocks, find_P, find_Q, verify_subgroup
from .verdict import Verdict


def nabla(A, B, C, D) -> np.ndarray:
    """Mask of shape ``(|W1|, |W2|)``; flattened it indexes ``w1 * |W2| + w2``."""
    A = np.asarray(A, dtype=bool)
    B = np.asarray(B, dtype=bool)
    C = np.asarray(C, dtype=bool)
    D = np.asarray(D, dtype=bool)
    if A.shape != B.shape:
        raise MixedGroups(f"A and B live in different groups ({A.size} vs {B.size} elements)")
    if C.shape != D.shape:
        raise MixedGroups(f"C and D live in different groups ({C.size} vs {D.size} elements)")
    out = np.empty((A.size, C.size), dtype=bool)
    out[A & B] = ~C
    out[~A & ~B] = C
    out[A & ~B] = ~D
    out[~A & B] = D
    return out


def nabla_size(A, B, C, D) -> int:
    A, B, C, D = (np.asarray(x, dtype=bool) for x in (A, B, C, D))
    n2 = C.size
    c, d = int(C.sum()), int(D.sum())
    return (
        int((A & B).sum()) * (n2 - c)
        + int((~A & ~B).sum()) * c
        + int((A & ~B).sum()) * (n2 - d)
        + int((~A & B).sum()) * d
    )


def small_large(w: int) -> tuple[int, int]:
    return ((w * w - w) // 2, (w * w + w) // 2)


@dataclass(frozen=True, eq=False)
class ArrangedBlocks:
    """Four blocks in Klein order together with the subgroup certified against them."""

    ctx: GroupContext
    blocks: tuple[np.ndarray, ...]
    subgroup: CertifiedSubgroup
    w: int  # square root of |W|
    role: str


@dataclass(frozen=True, eq=False)
class ComposedBlocks:
    ctx: GroupContext
    blocks: tuple[np.ndarray, ...]
    qp: CertifiedSubgroup
    w: int
    checks: Verdict = field(default_factory=Verdict)

    @property
    def side_markers(self) -> tuple[str, ...]:
        small, large = small_large(self.w)
        return tuple("large" if int(b.sum()) == large else "small" for b in self.blocks)

    def subset(self) -> GroupSubset:
        return GroupSubset.from_blocks(self.ctx, self.blocks)


def _sqrt_w(ctx: GroupContext) -> int:
    w = 1
    for p, e in ctx.w_factors:
        w *= p ** (e // 2)
    if w * w != ctx.w_order:
        raise CertificateMismatch(f"|W| = {ctx.w_order} is not a perfect square")
    return w


def _require(verdict: Verdict):
    if not verdict.ok:
        raise CertificateMismatch(verdict.witness)


def _check_sizes(verdict, name, blocks, expected):
    got = tuple(int(b.sum()) for b in blocks)
    verdict.add(f"{name}.sizes", got == tuple(expected), f"sizes={got} expected={tuple(expected)}")


def arrange_as_E1(blocks: HdsBlocks, Q: CertifiedSubgroup) -> ArrangedBlocks:
    """``(A0, A1, A2, A3) = (D0, D2, D1, D3)`` so that ``Q`` misses A2 and lies in A3."""
    w = _sqrt_w(blocks.ctx)
    D0, D1, D2, D3 = blocks.blocks
    arranged = (D0, D2, D1, D3)
    sub = CertifiedSubgroup(blocks.ctx, Q.elements, disjoint_from=(2,), contained_in=(3,), name="Q", line=Q.line)
    verdict = Verdict()
    small, large = small_large(w)
    _check_sizes(verdict, "E1", arranged, (small, small, small, large))
    verdict.extend(verify_subgroup(sub, arranged, w))
    _require(verdict)
    return ArrangedBlocks(blocks.ctx, arranged, sub, w, "E1")


def arrange_as_E2(blocks, P: CertifiedSubgroup | None = None) -> ArrangedBlocks:
    """Put the large block at B0 and the two P-disjoint blocks at B1 and B3.

    Prime-level input: ``(B0, B1, B2, B3) = (D3, D0, D1, D2)``.  Composite
    input: swap the Klein coordinates g1 and g2, an automorphism of K.
    """
    if isinstance(blocks, ComposedBlocks):
        E = blocks.blocks
        arranged = (E[0], E[2], E[1], E[3])
        src = blocks.qp
        w = blocks.w
        ctx = blocks.ctx
    else:
        if P is None:
            raise TypeError("prime-level blocks need their P subgroup")
        D0, D1, D2, D3 = blocks.blocks
        arranged = (D3, D0, D1, D2)
        src = P
        w = _sqrt_w(blocks.ctx)
        ctx = blocks.ctx
    sub = CertifiedSubgroup(ctx, src.elements, disjoint_from=(1, 3), name=src.name, line=src.line)
    verdict = Verdict()
    small, large = small_large(w)
    _check_sizes(verdict, "E2", arranged, (large, small, small, small))
    verdict.extend(verify_subgroup(sub, arranged, w))
    _require(verdict)
    return ArrangedBlocks(ctx, arranged, sub, w, "E2")


def compose(E1: ArrangedBlocks, E2: ArrangedBlocks) -> ComposedBlocks:
    if E1.role != "E1" or E2.role != "E2":
        raise CertificateMismatch("compose expects an E1 arrangement and an E2 arrangement")
    if E1.w % 2 == 0 or E2.w % 2 == 0:
        raise CertificateMismatch("both factors need odd w")
    A0, A1, A2, A3 = E1.blocks
    B0, B1, B2, B3 = E2.blocks
    parts = (
        nabla(A0, A1, B0, B1),
        nabla(A0, A1, B2, B3),
        nabla(A2, A3, B0, B1),
        nabla(A2, A3, B2, B3),
    )
    ctx = GroupContext(E2.ctx.w_factors + E1.ctx.w_factors)
    w = E1.w * E2.w
    small, large = small_large(w)
    got = tuple(int(x.sum()) for x in parts)
    if got != (large, small, small, small):
        raise SizeInvariantViolated(f"composed block sizes {got} != {(large, small, small, small)}")
    qp2d = np.outer(E1.subgroup.elements, E2.subgroup.elements)
    blocks = tuple(x.ravel() for x in parts)
    qp = CertifiedSubgroup(ctx, qp2d.ravel(), disjoint_from=(2, 3), name="QP")
    verdict = Verdict()
    verdict.add("compose.sizes", True)
    verdict.extend(verify_subgroup(qp, blocks, w))
    _require(verdict)
    for b in blocks:
        b.setflags(write=False)
    return ComposedBlocks(ctx, blocks, qp, w, verdict)


@dataclass
class PrimeLevel:
    blocks: HdsBlocks
    P: CertifiedSubgroup
    Q: CertifiedSubgroup


@dataclass
class BuildResult:
    m: int
    hds: GroupSubset
    subgroup: CertifiedSubgroup
    klein_pair: tuple[int, int]
    blocks: tuple[np.ndarray, ...]
    levels: list = field(default_factory=list)
    checks: Verdict = field(default_factory=Verdict)
    primes: dict = field(default_factory=dict)


def factor_schedule(m: int) -> list[int]:
    """Prime factors of ``m`` with multiplicity, descending."""
    if m <= 1 or m % 2 == 0:
        raise FactorizationError(f"m must be an odd integer > 1, got {m}")
    return sorted(prime_factors(m), reverse=True)


def prime_level(cert) -> PrimeLevel:
    blocks = build_blocks(cert)
    return PrimeLevel(blocks, find_P(cert, blocks), find_Q(cert, blocks))


def build_for_m(m: int, certificates) -> BuildResult:
    """Difference set of order ``4 m^4`` plus a subgroup of order ``m^2`` for the Bush step.

    ``certificates`` maps each prime factor to a :class:`SpreadCertificate`
    (or is a callable ``p -> certificate``).
    """
    primes = factor_schedule(m)
    get = certificates if callable(certificates) else certificates.__getitem__
    levels: dict[int, PrimeLevel] = {}

    def level(p):
        if p not in levels:
            levels[p] = prime_level(get(p))
        return levels[p]

    checks = Verdict()
    history = []
    base = level(primes[-1])
    if len(primes) == 1:
        hds = assemble_hds(base.blocks)
        history.append(("prime", primes[-1]))
        return BuildResult(m, hds, base.P, (0, 2), base.blocks.blocks, history, checks, levels)
    running = arrange_as_E2(base.blocks, base.P)
    history.append(("prime", primes[-1]))
    composed = None
    for p in reversed(primes[:-1]):
        fresh = level(p)
        E1 = arrange_as_E1(fresh.blocks, fresh.Q)
        composed = compose(E1, running)
        checks.extend(composed.checks, f"level{len(history)}.")
        history.append(("compose", p, composed.w))
        running = arrange_as_E2(composed)
    return BuildResult(m, composed.subset(), composed.qp, (2, 3), composed.blocks, history, checks, levels)


def verify_composed_sizes(blocks, w: int) -> Verdict:
    small, large = small_large(w)
    verdict = Verdict()
    _check_sizes(verdict, "composite", blocks, (large, small, small, small))
    return verdict
