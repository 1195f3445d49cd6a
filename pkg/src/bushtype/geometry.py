"""Points, planes and the regular spread of PG(3, p)."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

from .algebra import FieldTable, Vec4, build_field, vec_to_index
from .errors import DimensionMismatch


def normalize(v, p: int) -> Vec4:
    """Scale ``v`` so that its first nonzero coordinate is 1."""
    for c in v:
        if c % p:
            inv = pow(int(c), p - 2, p)
            return tuple((int(x) * inv) % p for x in v)
    raise ValueError("the zero vector spans no point")


@dataclass(frozen=True)
class ProjPoint:
    rep: Vec4
    index: int
    p: int


@dataclass(frozen=True)
class ProjPlane:
    normal: Vec4
    p: int

    def __post_init__(self):
        if not any(c % self.p for c in self.normal):
            raise ValueError("plane normal must be nonzero")
        object.__setattr__(self, "normal", normalize(self.normal, self.p))


@dataclass(frozen=True)
class SpreadLine:
    points: tuple[int, ...]
    label: int


@dataclass(frozen=True)
class Spread:
    p: int
    lines: tuple[SpreadLine, ...]

    @cached_property
    def line_of_point(self) -> np.ndarray:
        n = sum(len(L.points) for L in self.lines)
        out = np.full(n, -1, dtype=np.int64)
        for i, L in enumerate(self.lines):
            out[list(L.points)] = i
        return out

    def relabel(self, order) -> "Spread":
        """Spread whose line labelled ``k+1`` is ``self.lines[order[k]]``."""
        return Spread(self.p, tuple(SpreadLine(self.lines[o].points, k + 1) for k, o in enumerate(order)))


class ProjectiveSpace:
    """PG(3, p) with its canonical point order (lexicographic on normalized rep).

    Planes are indexed by their normalized normal vector, so plane ``i`` has
    normal ``reps[i]``.
    """

    def __init__(self, field: FieldTable):
        self.field = field
        p = self.p = field.p
        reps = [v for v in itertools.product(range(p), repeat=4) if any(v) and normalize(v, p) == v]
        self.reps = np.array(reps, dtype=np.int64)
        self.n_points = len(reps)
        point_of = np.full(p**4, -1, dtype=np.int64)
        for i, v in enumerate(reps):
            for c in range(1, p):
                point_of[vec_to_index([(c * x) % p for x in v], p)] = i
        self.point_of = point_of
        point_of.setflags(write=False)

    @cached_property
    def incidence(self) -> np.ndarray:
        """Boolean matrix ``[plane, point]``."""
        inc = (self.reps @ self.reps.T) % self.p == 0
        inc.setflags(write=False)
        return inc

    @cached_property
    def lift_table(self) -> np.ndarray:
        """``lift_table[i]`` lists the ``p - 1`` field indices spanning point ``i``."""
        p = self.p
        weights = np.array([1, p, p * p, p**3])
        scal = np.arange(1, p)
        vecs = (scal[None, :, None] * self.reps[:, None, :]) % p
        return vecs @ weights

    def points(self) -> list[ProjPoint]:
        return [ProjPoint(tuple(int(x) for x in r), i, self.p) for i, r in enumerate(self.reps)]

    def point_index(self, v) -> int:
        i = int(self.point_of[vec_to_index([x % self.p for x in v], self.p)])
        if i < 0:
            raise ValueError("the zero vector spans no point")
        return i

    def plane(self, i: int) -> ProjPlane:
        return ProjPlane(tuple(int(x) for x in self.reps[i]), self.p)

    def lift_mask(self, point_indices) -> np.ndarray:
        """Boolean mask over GF(p)^4 of the lift of a point set."""
        mask = np.zeros(self.p**4, dtype=bool)
        idx = np.fromiter(point_indices, dtype=np.int64)
        if idx.size:
            mask[self.lift_table[idx].ravel()] = True
        return mask


@lru_cache(maxsize=None)
def projective_space(p: int) -> ProjectiveSpace:
    return ProjectiveSpace(build_field(p))


def enum_points(t: FieldTable) -> list[ProjPoint]:
    return projective_space(t.p).points()


def plane_point_incidence(plane: ProjPlane, pt: ProjPoint) -> bool:
    if plane.p != pt.p:
        raise DimensionMismatch(f"plane over GF({plane.p}) vs point over GF({pt.p})")
    return sum(a * b for a, b in zip(plane.normal, pt.rep)) % plane.p == 0


@lru_cache(maxsize=None)
def _regular_spread(p: int) -> Spread:
    t = build_field(p)
    space = projective_space(p)
    step = t.subfield_step
    # GF(p^2)* = <g^(p^2+1)>, so the orbit of g^e is its residue class mod p^2+1
    groups: dict[int, set[int]] = {}
    for e in range(t.order):
        groups.setdefault(e % step, set()).add(int(space.point_of[t.exp_table[e]]))
    lines = sorted(tuple(sorted(g)) for g in groups.values())
    return Spread(p, tuple(SpreadLine(pts, k + 1) for k, pts in enumerate(lines)))


def regular_spread(t: FieldTable) -> Spread:
    return _regular_spread(t.p)


def lift(t: FieldTable, X) -> frozenset:
    """All nonzero vectors spanning a point of ``X`` (points or point indices)."""
    p = t.p
    out = set()
    for x in X:
        rep = x.rep if isinstance(x, ProjPoint) else tuple(int(c) for c in projective_space(p).reps[x])
        for c in range(1, p):
            out.add(tuple((c * a) % p for a in rep))
    return frozenset(out)


def plane_counts(space: ProjectiveSpace, point_indices) -> np.ndarray:
    """Number of points of the set on each plane."""
    ind = np.zeros(space.n_points, dtype=np.int64)
    ind[list(point_indices)] = 1
    return space.incidence.astype(np.int64) @ ind
