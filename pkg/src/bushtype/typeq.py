"""Type-Q point sets of PG(3, p) and pairs of them adapted to the regular spread.

A pair ``(C0, C1)`` is *spread-adapted* when, after relabelling the spread,
``C0`` meets each of the first ``s = (p^2+1)/2`` lines in ``(p+1)/2`` points
and ``C1`` meets each of the last ``s`` lines in ``(p+1)/2`` points.

Three search strategies are available:

``cyclotomic-first``
    Try the projectivized quartic cyclotomic classes of GF(p^4)*, then the
    signed half-line sets described in :func:`signed_halfline_pairs`.
``backtracking``
    Line-by-line exhaustive search with plane-count pruning.
``randomized-restart``
    The same search with seeded random line and subset orders, restarted
    with a growing node cap.
"""

from __future__ import annotations

import itertools
import random
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .algebra import FieldTable, build_field
from .errors import BudgetExhausted, ParseError
from .geometry import ProjectiveSpace, Spread, projective_space, regular_spread
from .textfmt import field_value, split_lines, uint, uint_list
from .verdict import Verdict

STRATEGIES = ("cyclotomic-first", "backtracking", "randomized-restart")


def type_q_size(p: int) -> int:
    return (p**4 - 1) // (4 * (p - 1))


def type_q_intersections(p: int) -> tuple[int, int]:
    return ((p - 1) ** 2 // 4, (p + 1) ** 2 // 4)


def verify_type_q(C, p: int) -> Verdict:
    """Check the size of ``C`` and the intersection number of every plane."""
    space = projective_space(p)
    pts = sorted(set(int(c) for c in C))
    verdict = Verdict()
    target = type_q_size(p)
    if not verdict.add("typeq.size", len(pts) == target, f"size={len(pts)} expected={target}"):
        return verdict
    if pts and (pts[0] < 0 or pts[-1] >= space.n_points):
        verdict.add("typeq.points", False, f"point index out of range 0..{space.n_points - 1}")
        return verdict
    counts = space.incidence[:, pts].sum(axis=1)
    lo, hi = type_q_intersections(p)
    bad = np.nonzero((counts != lo) & (counts != hi))[0]
    witness = ""
    if bad.size:
        plane = int(bad[0])
        witness = f"plane={plane} normal={tuple(int(x) for x in space.reps[plane])} count={int(counts[plane])}"
    verdict.add("typeq.planes", bad.size == 0, witness)
    return verdict


def plane_count_profile(C, p: int) -> Counter:
    """Histogram ``{intersection size: number of planes}``."""
    space = projective_space(p)
    counts = space.incidence[:, sorted(set(C))].sum(axis=1)
    return Counter(int(c) for c in counts)


def cyclotomic_candidates(t: FieldTable) -> list[frozenset]:
    """Projections of the four index-4 cyclotomic classes ``{g^(4k+j)}``."""
    space = projective_space(t.p)
    out = []
    for j in range(4):
        pts = space.point_of[t.exp_table[j::4]]
        out.append(frozenset(int(x) for x in pts))
    return out


@dataclass(frozen=True)
class SpreadCertificate:
    p: int
    C0: tuple[int, ...]
    C1: tuple[int, ...]
    labeling: tuple[int, ...]  # labeling[k] = original label of the line now labelled k+1
    strategy: str = ""
    seed: int = 0
    nodes: int = 0

    @property
    def s(self) -> int:
        return (self.p**2 + 1) // 2

    def labeled_spread(self) -> Spread:
        return regular_spread(build_field(self.p)).relabel([lab - 1 for lab in self.labeling])

    def to_text(self, comments=()) -> str:
        lines = [f"TYPEQ v1 p={self.p}"]
        lines += [f"# {c}" for c in comments]
        lines.append("C0: " + " ".join(map(str, self.C0)))
        lines.append("C1: " + " ".join(map(str, self.C1)))
        lines.append("labeling: " + " ".join(map(str, self.labeling)))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "SpreadCertificate":
        rows = split_lines(text)
        if not rows or not rows[0].startswith("TYPEQ v1 p="):
            raise ParseError("missing 'TYPEQ v1 p=<p>' header", 1)
        p = uint(rows[0][len("TYPEQ v1 p="):], 1, "prime in header")
        fields = {}
        for lineno, row in enumerate(rows[1:], start=2):
            if not row.strip() or row.startswith("#"):
                continue
            key, sep, rest = row.partition(":")
            if not sep or key not in ("C0", "C1", "labeling"):
                raise ParseError(f"unexpected line {row[:40]!r}", lineno)
            if key in fields:
                raise ParseError(f"duplicate field {key}", lineno)
            fields[key] = uint_list(field_value(rest, lineno), " ", lineno, f"entry in {key}")
        missing = {"C0", "C1", "labeling"} - fields.keys()
        if missing:
            raise ParseError(f"missing fields {sorted(missing)}")
        return cls(p, fields["C0"], fields["C1"], fields["labeling"])

    def save(self, path, comments=()) -> None:
        Path(path).write_text(self.to_text(comments))

    @classmethod
    def load(cls, path) -> "SpreadCertificate":
        return cls.from_text(Path(path).read_text())


def verify_certificate(cert: SpreadCertificate) -> Verdict:
    """Re-verify a certificate from scratch: both sets, then every line count."""
    p, s = cert.p, cert.s
    verdict = Verdict()
    verdict.extend(verify_type_q(cert.C0, p), "C0.")
    verdict.extend(verify_type_q(cert.C1, p), "C1.")
    n_lines = p * p + 1
    if not verdict.add(
        "labeling.permutation",
        sorted(cert.labeling) == list(range(1, n_lines + 1)),
        f"labeling is not a permutation of 1..{n_lines}",
    ):
        return verdict
    spread = cert.labeled_spread()
    half = (p + 1) // 2
    c0, c1 = set(cert.C0), set(cert.C1)
    for name, C, first in (("C0", c0, True), ("C1", c1, False)):
        witness = ""
        for L in spread.lines:
            in_half = (L.label <= s) == first
            got = len(C.intersection(L.points))
            want = half if in_half else 0
            if got != want:
                witness = f"line={L.label} count={got} expected={want}"
                break
        verdict.add(f"{name}.spread", not witness, witness)
    return verdict


class _Budget:
    def __init__(self, budget: int):
        self.budget = budget
        self.nodes = 0

    def spend(self, n: int = 1) -> None:
        self.nodes += n
        if self.nodes > self.budget:
            raise BudgetExhausted(self.budget)


def _line_halves(t: FieldTable, space: ProjectiveSpace, spread: Spread) -> np.ndarray:
    """+1/-1 per point: whether it lies in the same GF(p^2)-square class as its line's least point.

    Two points of one line differ by an element of GF(p^2)*; the sign is the
    quadratic character of that ratio.
    """
    step = t.subfield_step
    half = np.zeros(space.n_points, dtype=np.int64)
    logs = t.log_table[space.lift_table[:, 0]]
    for L in spread.lines:
        base = logs[L.points[0]]
        for pt in L.points:
            half[pt] = 1 if ((logs[pt] - base) // step) % 2 == 0 else -1
    return half


def halfline_conference_matrix(t: FieldTable, spread: Spread) -> np.ndarray | None:
    """Signed line-vs-line matrix driving the signed half-line construction.

    Row ``l`` comes from a plane containing line ``l``: entry ``m`` is +1 or -1
    according to which half of line ``m`` the plane meets.  Rows are rescaled
    to make the matrix symmetric; ``None`` is returned if that fails or if
    ``C C^T != p^2 I``.
    """
    p = t.p
    space = projective_space(p)
    half = _line_halves(t, space, spread)
    line_of = spread.line_of_point
    n = len(spread.lines)
    inc = space.incidence
    C = np.zeros((n, n), dtype=np.int64)
    done = np.zeros(n, dtype=bool)
    for plane in range(space.n_points):
        on = np.nonzero(inc[plane])[0]
        per_line = np.bincount(line_of[on], minlength=n)
        contained = int(np.argmax(per_line))
        if done[contained]:
            continue
        done[contained] = True
        np.add.at(C[contained], line_of[on], half[on])
        if done.all():
            break
    sign = np.ones(n, dtype=np.int64)
    sign[1:] = C[0, 1:] * C[1:, 0]
    C = sign[:, None] * C
    if not (C == C.T).all() or not (C @ C.T == p * p * np.eye(n, dtype=np.int64)).all():
        return None
    return C


def _pivots(M: np.ndarray, rank: int) -> list[int]:
    cols: list[int] = []
    for j in range(M.shape[1]):
        if np.linalg.matrix_rank(M[:, cols + [j]], tol=1e-8) == len(cols) + 1:
            cols.append(j)
            if len(cols) == rank:
                break
    return cols


def _pm1_eigenvectors(C: np.ndarray, lam: int, budget: _Budget, chunk: int = 4096):
    """Yield every +-1 vector ``v`` with ``C v = lam v`` and ``v[pivot_0] = +1``."""
    n = C.shape[0]
    proj = (C + lam * np.eye(n)) / (2 * lam)
    rank = int(round(np.trace(proj)))
    cols = _pivots(proj, rank)
    basis = proj[:, cols]
    M = basis @ np.linalg.inv(basis[cols])
    free = rank - 1
    total = 1 << free
    shifts = np.arange(free - 1, -1, -1, dtype=np.int64)
    for start in range(0, total, chunk):
        ks = np.arange(start, min(total, start + chunk), dtype=np.int64)
        budget.spend(ks.size)
        bits = (ks[:, None] >> shifts[None, :]) & 1
        S = np.hstack([np.ones((ks.size, 1)), 1.0 - 2.0 * bits])
        V = S @ M.T
        good = np.nonzero(np.all(np.abs(np.abs(V) - 1.0) < 1e-6, axis=1))[0]
        for g in good:
            v = np.rint(V[g]).astype(np.int64)
            if (C @ v == lam * v).all():
                yield v


def signed_halfline_pairs(t: FieldTable, spread: Spread, budget: _Budget):
    """Yield spread-adapted candidate pairs built from +-1 eigenvectors.

    With ``C`` from :func:`halfline_conference_matrix`, eigenvectors ``v``
    (eigenvalue ``p``) and ``w`` (eigenvalue ``-p``) give the signed line
    vectors ``x = (v+w)/2`` and ``y = (v-w)/2``. ``x`` picks, on each line
    where it is nonzero, the half of that line with matching sign; so does
    ``y`` on the complementary lines.
    """
    C = halfline_conference_matrix(t, spread)
    if C is None:
        return
    space = projective_space(t.p)
    half = _line_halves(t, space, spread)
    line_of = spread.line_of_point
    pts = np.arange(space.n_points)

    def points_for(sign_vec):
        chosen = sign_vec[line_of] * half == 1
        return tuple(int(x) for x in pts[chosen & (sign_vec[line_of] != 0)])

    w_cache: list[np.ndarray] = []
    w_iter = _pm1_eigenvectors(C, -t.p, budget)
    for v in _pm1_eigenvectors(C, t.p, budget):
        k = 0
        while True:
            if k == len(w_cache):
                w = next(w_iter, None)
                if w is None:
                    break
                w_cache.append(w)
            w = w_cache[k]
            k += 1
            x = (v + w) // 2
            y = (v - w) // 2
            yield points_for(x), points_for(y)


def _subset_table(space: ProjectiveSpace, line_points, k: int):
    subs = list(itertools.combinations(sorted(line_points), k))
    inc = space.incidence
    contrib = np.stack([inc[:, list(sub)].sum(axis=1) for sub in subs]).astype(np.int16)
    return subs, contrib


def _backtrack(space, spread, line_ids, need, exact, budget, hi, rng=None, node_cap=None):
    """Yield point tuples using ``need`` of ``line_ids`` with (p+1)/2 points each.

    Lines are processed in the given order; on each line the (p+1)/2-subsets
    come first in lexicographic order (or shuffled by ``rng``), then the
    option of skipping the line.  A branch is cut as soon as a plane holds
    more than ``hi`` points.
    """
    p = space.p
    k = (p + 1) // 2
    tables = []
    for lid in line_ids:
        subs, contrib = _subset_table(space, spread.lines[lid].points, k)
        order = list(range(len(subs)))
        if rng is not None:
            rng.shuffle(order)
        tables.append((subs, contrib, order))
    n = len(line_ids)
    counts = np.zeros(space.n_points, dtype=np.int16)
    chosen: list[tuple[int, ...]] = []
    spent = [0]

    def step():
        budget.spend()
        spent[0] += 1
        if node_cap is not None and spent[0] > node_cap:
            raise _RestartCap

    def rec(i, counts):
        used = len(chosen)
        if used == need:
            yield tuple(sorted(x for sub in chosen for x in sub))
            return
        if n - i < need - used:
            return
        subs, contrib, order = tables[i]
        nxt = counts[None, :] + contrib
        fits = (nxt <= hi).all(axis=1)
        for j in order:
            step()
            if not fits[j]:
                continue
            chosen.append(subs[j])
            yield from rec(i + 1, nxt[j])
            chosen.pop()
        if not exact and n - i - 1 >= need - used:
            step()
            yield from rec(i + 1, counts)

    yield from rec(0, counts)


class _RestartCap(Exception):
    pass


def _is_type_q_fast(space, pts, lo, hi) -> bool:
    counts = space.incidence[:, list(pts)].sum(axis=1)
    return bool(np.all((counts == lo) | (counts == hi)))


def _lines_met(spread: Spread, pts) -> frozenset:
    return frozenset(int(spread.line_of_point[x]) for x in pts)


def _search_backtracking(space, spread, budget, rng=None, node_cap=None):
    p = space.p
    s = (p * p + 1) // 2
    lo, hi = type_q_intersections(p)
    all_lines = list(range(len(spread.lines)))
    if rng is not None:
        rng.shuffle(all_lines)
    for c0 in _backtrack(space, spread, all_lines, s, False, budget, hi, rng, node_cap):
        if not _is_type_q_fast(space, c0, lo, hi):
            continue
        used = _lines_met(spread, c0)
        rest = [lid for lid in all_lines if lid not in used]
        for c1 in _backtrack(space, spread, rest, s, True, budget, hi, rng, node_cap):
            if _is_type_q_fast(space, c1, lo, hi):
                return c0, c1
    return None


def _spread_adapted(spread: Spread, pts, p) -> frozenset | None:
    """Lines met by ``pts`` if each is met in exactly (p+1)/2 points and there are s of them."""
    per_line = Counter(int(spread.line_of_point[x]) for x in pts)
    if len(per_line) != (p * p + 1) // 2 or set(per_line.values()) != {(p + 1) // 2}:
        return None
    return frozenset(per_line)


def _search_cyclotomic(t, space, spread, budget):
    p = t.p
    lo, hi = type_q_intersections(p)
    n_lines = len(spread.lines)
    classes = []
    for cand in cyclotomic_candidates(t):
        budget.spend()
        lines = _spread_adapted(spread, cand, p)
        if lines is not None and _is_type_q_fast(space, cand, lo, hi):
            classes.append((tuple(sorted(cand)), lines))
    for (a, la), (b, lb) in itertools.product(classes, repeat=2):
        if len(la | lb) == n_lines and not (la & lb):
            return a, b
    for c0, c1 in signed_halfline_pairs(t, spread, budget):
        budget.spend()
        if _spread_adapted(spread, c0, p) is None or _spread_adapted(spread, c1, p) is None:
            continue
        if _is_type_q_fast(space, c0, lo, hi) and _is_type_q_fast(space, c1, lo, hi):
            return c0, c1
    return None


def search_spread_pair(spread: Spread, strategy: str = "cyclotomic-first", seed: int = 0, budget: int = 10**6) -> SpreadCertificate:
    """Find a spread-adapted pair of type-Q sets and return its certificate.

    Raises :class:`BudgetExhausted` when ``budget`` nodes are used up without
    success.  The result depends only on ``(p, strategy, seed, budget)``.
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}")
    p = spread.p
    t = build_field(p)
    space = projective_space(p)
    b = _Budget(budget)
    if budget <= 0:
        raise BudgetExhausted(0)
    found = None
    try:
        if strategy == "cyclotomic-first":
            found = _search_cyclotomic(t, space, spread, b)
        elif strategy == "backtracking":
            found = _search_backtracking(space, spread, b)
        else:
            rng = random.Random(seed)
            restart = 0
            while found is None:
                cap = 2000 * 2**restart
                try:
                    found = _search_backtracking(space, spread, b, rng, cap)
                    if found is None:
                        break
                except _RestartCap:
                    restart += 1
    except BudgetExhausted:
        raise BudgetExhausted(min(b.nodes, budget)) from None
    if found is None:
        raise BudgetExhausted(b.nodes, f"search space exhausted after {b.nodes} nodes without a pair")
    c0, c1 = found
    l0 = _lines_met(spread, c0)
    l1 = _lines_met(spread, c1)
    order = sorted(l0) + sorted(l1)
    labeling = tuple(spread.lines[i].label for i in order)
    cert = SpreadCertificate(p, tuple(sorted(c0)), tuple(sorted(c1)), labeling, strategy, seed, b.nodes)
    check = verify_certificate(cert)
    if not check.ok:
        raise AssertionError(f"search produced an invalid certificate: {check.witness}")
    return cert
