"""Bit-packed symmetric Bush-type Hadamard matrices.

Rows are packed into little-endian 64-bit words; bit ``j`` of a row is 1 iff
entry ``j`` is -1.  The dot product of two rows is then
``order - 2 * popcount(row_a ^ row_b)``.
"""

from __future__ import annotations

import math
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DisjointnessViolated, NotAConnectionSet, ParseError
from .groupring import GroupContext, GroupSubset, difference_counts, translate, verify_reversible
from .hds import CertifiedSubgroup
from .verdict import Verdict

MAGIC = b"BUSHMAT1"
_TILE_BYTES = 32 * 2**20


def _words(order: int) -> int:
    return (order + 63) // 64


def pack_bits(bits: np.ndarray) -> np.ndarray:
    """Pack a boolean ``(rows, order)`` array (True means -1) into uint64 words."""
    bits = np.asarray(bits, dtype=bool)
    n_rows, order = bits.shape
    nw = _words(order)
    packed = np.packbits(bits, axis=1, bitorder="little")
    out = np.zeros((n_rows, nw * 8), dtype=np.uint8)
    out[:, : packed.shape[1]] = packed
    return out.view("<u8")


def unpack_bits(rows: np.ndarray, order: int) -> np.ndarray:
    return np.unpackbits(np.ascontiguousarray(rows, dtype="<u8").view(np.uint8), axis=1, bitorder="little")[:, :order].astype(bool)


@dataclass(frozen=True, eq=False)
class BushMatrix:
    order: int
    block_size: int
    rows: np.ndarray
    ordering_witness: np.ndarray | None = None

    def __post_init__(self):
        if self.rows.shape != (self.order, _words(self.order)):
            raise ValueError(f"rows have shape {self.rows.shape}, expected {(self.order, _words(self.order))}")

    @classmethod
    def from_pm1(cls, M, block_size: int | None = None, ordering_witness=None) -> "BushMatrix":
        M = np.asarray(M)
        order = M.shape[0]
        if block_size is None:
            block_size = math.isqrt(order)
        return cls(order, block_size, pack_bits(M < 0), ordering_witness)

    def to_pm1(self) -> np.ndarray:
        return np.where(unpack_bits(self.rows, self.order), -1, 1).astype(np.int8)

    def entry(self, i: int, j: int) -> int:
        i, j = int(i), int(j)
        return -1 if (int(self.rows[i, j // 64]) >> (j % 64)) & 1 else 1

    def flipped(self, i: int, j: int) -> "BushMatrix":
        rows = self.rows.copy()
        rows[i, j // 64] ^= np.uint64(1 << (j % 64))
        return BushMatrix(self.order, self.block_size, rows, self.ordering_witness)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, BushMatrix)
            and self.order == other.order
            and self.block_size == other.block_size
            and np.array_equal(self.rows, other.rows)
        )

    # file formats

    def ascii_header(self) -> str:
        return f"BUSH v1 order={self.order} block={self.block_size}"

    def to_ascii(self, comments=()) -> bytes:
        head = "\n".join([self.ascii_header()] + [f"# {c}" for c in comments]) + "\n"
        chunks = [head.encode()]
        step = max(1, 2**22 // max(1, self.order))
        for start in range(0, self.order, step):
            bits = unpack_bits(self.rows[start : start + step], self.order)
            text = np.where(bits, ord("-"), ord("+")).astype(np.uint8)
            text = np.hstack([text, np.full((text.shape[0], 1), ord("\n"), dtype=np.uint8)])
            chunks.append(text.tobytes())
        return b"".join(chunks)

    def to_packed(self) -> bytes:
        return MAGIC + struct.pack("<I", self.order) + np.ascontiguousarray(self.rows, dtype="<u8").tobytes()

    def save(self, path, fmt: str = "ascii", comments=()) -> None:
        data = self.to_packed() if fmt == "packed" else self.to_ascii(comments)
        Path(path).write_bytes(data)


def parse_ascii(data: bytes) -> BushMatrix:
    text = data.decode("ascii", errors="replace")
    rows = text.split("\n")
    head = rows[0].split(" ")
    if len(head) != 4 or head[:2] != ["BUSH", "v1"] or not head[2].startswith("order=") or not head[3].startswith("block="):
        raise ParseError("missing 'BUSH v1 order=<N> block=<2n>' header", 1)
    try:
        order = int(head[2][6:])
        block = int(head[3][6:])
    except ValueError:
        raise ParseError("non-integer order or block", 1) from None
    body = []
    for lineno, row in enumerate(rows[1:], start=2):
        if row.startswith("#") or (not row and len(body) == order):
            continue
        if len(body) == order:
            raise ParseError("trailing data after the last row", lineno)
        if len(row) != order:
            raise ParseError(f"row has {len(row)} characters, expected {order}", lineno)
        arr = np.frombuffer(row.encode(), dtype=np.uint8)
        bad = np.flatnonzero((arr != ord("+")) & (arr != ord("-")))
        if bad.size:
            raise ParseError(f"invalid character {row[bad[0]]!r} at column {bad[0] + 1}", lineno)
        body.append(arr == ord("-"))
    if len(body) != order:
        raise ParseError(f"found {len(body)} rows, expected {order}")
    return BushMatrix(order, block, pack_bits(np.array(body).reshape(order, order)))


def parse_packed(data: bytes) -> BushMatrix:
    if data[:8] != MAGIC:
        raise ParseError("bad magic, expected BUSHMAT1")
    if len(data) < 12:
        raise ParseError("truncated header")
    (order,) = struct.unpack("<I", data[8:12])
    nw = _words(order)
    need = 12 + order * nw * 8
    if len(data) != need:
        raise ParseError(f"file has {len(data)} bytes, expected {need} for order {order}")
    rows = np.frombuffer(data, dtype="<u8", offset=12).reshape(order, nw).copy()
    return BushMatrix(order, math.isqrt(order), rows)


def load_matrix(path) -> BushMatrix:
    data = Path(path).read_bytes()
    if data.startswith(MAGIC):
        return parse_packed(data)
    return parse_ascii(data)


def order4_base() -> BushMatrix:
    H = np.array(
        [
            [1, 1, 1, -1],
            [1, 1, -1, 1],
            [1, -1, 1, 1],
            [-1, 1, 1, 1],
        ]
    )
    return BushMatrix.from_pm1(H, 2)


# construction


def coset_ordering(H: GroupSubset) -> np.ndarray:
    """Elements of G grouped by cosets of ``H``, representatives and members in enumeration order."""
    ctx = H.ctx
    hs = H.elements()
    seen = np.zeros(ctx.total_order, dtype=bool)
    out = []
    for x in range(ctx.total_order):
        if seen[x]:
            continue
        coset = np.sort(ctx.add(np.int64(x), hs))
        seen[coset] = True
        out.append(coset)
    return np.concatenate(out)


def klein_subgroup(ctx: GroupContext, sub: CertifiedSubgroup, klein: int) -> GroupSubset:
    """``(g_0, P) u (g_klein, P)`` inside ``K x W``."""
    w = ctx.w_order
    mask = np.zeros(ctx.total_order, dtype=bool)
    mask[:w] = sub.elements
    mask[klein * w : (klein + 1) * w] |= sub.elements
    return GroupSubset(ctx, mask)


def cayley_matrix(E: GroupSubset, ordering: np.ndarray, block_size: int) -> BushMatrix:
    """Matrix with entry -1 at ``(x, y)`` iff ``x - y`` lies in ``E``, rows and columns in ``ordering``."""
    ctx = E.ctx
    n = ordering.size
    cols = ctx.split(ordering)
    step = max(1, 2**21 // n)
    rows = np.empty((n, _words(n)), dtype="<u8")
    for start in range(0, n, step):
        stop = min(n, start + step)
        diffs = ctx.sub_outer(ctx.split(ordering[start:stop]), cols)
        rows[start:stop] = pack_bits(E.mask[diffs])
    return BushMatrix(n, block_size, rows, ordering)


def assemble_bush(E: GroupSubset, sub: CertifiedSubgroup, klein_pair=(0, 2)) -> BushMatrix:
    """Translate ``E`` by ``g_i``, order G by cosets of ``(g0,P) u (g_i g_j, P)`` and form the Cayley matrix."""
    i, j = klein_pair
    ctx = E.ctx
    Ep = translate(E, ctx.element(i, [0] * len(ctx.digit_primes)))
    H = klein_subgroup(ctx, sub, i ^ j)
    clash = np.flatnonzero(Ep.mask & H.mask)
    if clash.size:
        k, coords = ctx.coords(int(clash[0]))
        raise DisjointnessViolated(f"translated set meets H at {k};{','.join(map(str, coords))}")
    return cayley_matrix(Ep, coset_ordering(H), 2 * sub.order)


def connection_set(E: GroupSubset, klein: int) -> GroupSubset:
    ctx = E.ctx
    return translate(E, ctx.element(klein, [0] * len(ctx.digit_primes)))


# verification


@dataclass(frozen=True)
class SrgReport:
    v: int
    k: int
    lam: int | None
    mu: int | None
    ok: bool
    witness: str = ""

    def lines(self) -> list[str]:
        name = f"srg.parameters({self.v},{self.k},{self.lam},{self.mu})"
        return [f"PASS {name}" if self.ok else f"FAIL {name} {self.witness}"]


def verify_srg(Ep: GroupSubset, threads: int = 1) -> SrgReport:
    """Parameters of the Cayley graph of ``Ep`` against ``(4n^2, 2n^2-n, n^2-n, n^2-n)``."""
    ctx = Ep.ctx
    if Ep.mask[ctx.identity()]:
        raise NotAConnectionSet("identity lies in the connection set")
    if not verify_reversible(Ep):
        raise NotAConnectionSet("connection set is not inverse-closed")
    v = ctx.total_order
    k = Ep.size
    n = math.isqrt(v) // 2
    want_k, want = 2 * n * n - n, n * n - n
    counts = difference_counts(Ep, threads)
    nonid = np.ones(v, dtype=bool)
    nonid[ctx.identity()] = False
    adj = Ep.mask
    lam_vals = np.unique(counts[adj])
    mu_vals = np.unique(counts[nonid & ~adj])
    lam = int(lam_vals[0]) if lam_vals.size == 1 else None
    mu = int(mu_vals[0]) if mu_vals.size == 1 else None
    witness = ""
    if 4 * n * n != v:
        witness = f"order {v} is not 4n^2"
    elif k != want_k:
        witness = f"degree={k} expected={want_k}"
    else:
        bad = np.flatnonzero(nonid & (counts != want))
        if bad.size:
            z = int(bad[0])
            kl, coords = ctx.coords(z)
            witness = f"z={kl};{','.join(map(str, coords))} common={int(counts[z])} expected={want}"
    return SrgReport(v, k, lam, mu, not witness, witness)


def _row_blocks(H: BushMatrix, rows_per_chunk: int | None = None):
    """Yield ``(start, unpacked rows)`` chunks aligned to block boundaries."""
    N, s = H.order, H.block_size
    if rows_per_chunk is None:
        rows_per_chunk = max(s, (_TILE_BYTES // max(1, N)) // s * s)
    for start in range(0, N, rows_per_chunk):
        yield start, unpack_bits(H.rows[start : start + rows_per_chunk], N)


def verify_bush(H: BushMatrix, threads: int = 1) -> Verdict:
    """Symmetry, all-ones diagonal blocks, balanced off-diagonal blocks, pairwise orthogonal rows."""
    verdict = Verdict()
    N, s = H.order, H.block_size
    if not verdict.add("bush.shape", s > 0 and s * s == N, f"order={N} block={s} (need order = block^2)"):
        return verdict
    nb = N // s
    half = s // 2
    pad_bits = H.rows.shape[1] * 64 - N
    pad_witness = ""
    if pad_bits:
        tail = H.rows[:, -1] >> np.uint64(64 - pad_bits)
        bad = np.flatnonzero(tail)
        if bad.size:
            pad_witness = f"row={int(bad[0])} has nonzero padding"
    verdict.add("bush.padding", not pad_witness, pad_witness)

    sym_w = diag_w = row_w = col_w = ""
    for start, U in _row_blocks(H):
        c = U.shape[0]
        if not sym_w:
            w0, w1 = start // 64, (start + c + 63) // 64
            V = unpack_bits(H.rows[:, w0:w1], (w1 - w0) * 64)[:, start - 64 * w0 : start - 64 * w0 + c]
            diff = np.argwhere(U != V.T)
            if diff.size:
                r, col = diff[0]
                sym_w = f"entry ({start + r},{col}) != entry ({col},{start + r})"
        blocks = U.reshape(c, nb, s).sum(axis=2)
        own = (start + np.arange(c)) // s
        own_counts = blocks[np.arange(c), own]
        if not diag_w:
            bad = np.flatnonzero(own_counts)
            if bad.size:
                r = start + int(bad[0])
                col = own[bad[0]] * s + int(np.argmax(U[bad[0], own[bad[0]] * s : (own[bad[0]] + 1) * s]))
                diag_w = f"entry ({r},{col}) in diagonal block {own[bad[0]]} is -1"
        if not row_w:
            off = blocks.copy()
            off[np.arange(c), own] = half
            bad = np.argwhere(off != half)
            if bad.size:
                r, b = bad[0]
                row_w = f"row={start + r} block={b} sum={s - 2 * int(off[r, b])}"
        if not col_w:
            colsum = U.reshape(c // s, s, N).sum(axis=1).reshape(c // s, nb, s)
            for rb in range(c // s):
                b = start // s + rb
                cs = colsum[rb].copy()
                cs[b] = half
                bad = np.argwhere(cs != half)
                if bad.size:
                    cb, j = bad[0]
                    col_w = f"column={cb * s + j} block={b} sum={s - 2 * int(cs[cb, j])}"
                    break
    verdict.add("bush.symmetry", not sym_w, sym_w)
    verdict.add("bush.diagonal_blocks", not diag_w, diag_w)
    verdict.add("bush.offdiagonal_row_sums", not row_w, row_w)
    verdict.add("bush.offdiagonal_column_sums", not col_w, col_w)
    orth = first_nonorthogonal_pair(H, threads)
    verdict.add("bush.orthogonality", orth is None, "" if orth is None else f"rows=({orth[0]},{orth[1]}) dot={orth[2]}")
    return verdict


def first_nonorthogonal_pair(H: BushMatrix, threads: int = 1, tile: int = 64):
    """Lowest ``(i, j, dot)`` with ``i < j`` and nonzero dot product, or ``None``."""
    R = H.rows
    N = H.order
    nw = R.shape[1]
    target = N // 2 if N % 2 == 0 else None
    col_tile = max(tile, _TILE_BYTES // max(1, tile * nw * 8))

    def scan(i0):
        A = R[i0 : i0 + tile]
        for j0 in range(i0, N, col_tile):
            B = R[j0 : j0 + col_tile]
            pc = np.bitwise_count(A[:, None, :] ^ B[None, :, :]).sum(axis=2, dtype=np.int64)
            ii = i0 + np.arange(A.shape[0])[:, None]
            jj = j0 + np.arange(B.shape[0])[None, :]
            bad = np.argwhere((jj > ii) & (pc != (target if target is not None else -1)))
            if bad.size:
                a, b = bad[0]
                return (int(i0 + a), int(j0 + b), int(N - 2 * pc[a, b]))
        return None

    starts = range(0, N, tile)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(scan, starts))
    else:
        results = []
        for st in starts:
            r = scan(st)
            results.append(r)
            if r is not None:
                break
    hits = [r for r in results if r is not None]
    return min(hits) if hits else None


def verify_delsarte_property(H: BushMatrix) -> Verdict:
    """Every vertex sees exactly n vertices of each foreign coclique and none of its own.

    Adjacency is read from ``A = (J - H)/2``, i.e. the -1 entries; cocliques are
    the consecutive diagonal blocks.
    """
    verdict = Verdict()
    N, s = H.order, H.block_size
    n = s // 2
    nb = N // s
    own_w = foreign_w = ""
    for start, U in _row_blocks(H):
        c = U.shape[0]
        counts = U.reshape(c, nb, s).sum(axis=2)
        own = (start + np.arange(c)) // s
        if not own_w:
            bad = np.flatnonzero(counts[np.arange(c), own])
            if bad.size:
                own_w = f"vertex={start + int(bad[0])} has {int(counts[bad[0], own[bad[0]]])} neighbours in its coclique"
        if not foreign_w:
            off = counts.copy()
            off[np.arange(c), own] = n
            bad = np.argwhere(off != n)
            if bad.size:
                r, b = bad[0]
                foreign_w = f"vertex={start + r} coclique={b} neighbours={int(off[r, b])} expected={n}"
    verdict.add("delsarte.cocliques_edge_free", not own_w, own_w)
    verdict.add("delsarte.foreign_adjacency", not foreign_w, foreign_w)
    return verdict


def coset_adjacency_profile(Ep: GroupSubset, H: GroupSubset) -> dict[int, int]:
    """``{|coset & Ep| : number of cosets}`` over the cosets of ``H``.

    In a Cayley graph the number of neighbours of ``x`` inside ``c + H`` is
    ``|(x - c + H) & Ep|``, so this profile settles the coclique property for
    all vertices at once.
    """
    order = coset_ordering(H)
    per = Ep.mask[order].reshape(-1, H.size).sum(axis=1)
    out: dict[int, int] = {}
    for val in per[1:]:
        out[int(val)] = out.get(int(val), 0) + 1
    out.setdefault(-1, int(per[0]))  # key -1: intersection with H itself
    return out


# conversions between matrices and graphs


def adjacency_from_bush(H: BushMatrix) -> np.ndarray:
    """``A = (J - H) / 2`` as a dense 0/1 matrix."""
    return unpack_bits(H.rows, H.order).astype(np.int64)


def bush_from_adjacency(A: np.ndarray, block_size: int) -> BushMatrix:
    """``H = J - 2A``."""
    return BushMatrix(A.shape[0], block_size, pack_bits(np.asarray(A) != 0))


def verify_srg_dense(A: np.ndarray) -> Verdict:
    """``A^2 = n^2 I + (n^2 - n) J`` with zero diagonal, by integer matrix product."""
    A = np.asarray(A, dtype=np.int64)
    N = A.shape[0]
    n = math.isqrt(N) // 2
    verdict = Verdict()
    verdict.add("srg.symmetric", np.array_equal(A, A.T), "A != A^T")
    verdict.add("srg.loopless", not A.diagonal().any(), "nonzero diagonal")
    want = (n * n - n) * np.ones((N, N), dtype=np.int64) + n * n * np.eye(N, dtype=np.int64)
    diff = np.argwhere(A @ A != want)
    w = ""
    if diff.size:
        i, j = diff[0]
        w = f"(A^2)[{i},{j}]={(A @ A)[i, j]} expected={want[i, j]}"
    verdict.add("srg.A2=n2I+(n2-n)J", not diff.size, w)
    return verdict


def cocliques_from_blocks(A: np.ndarray, block_size: int) -> Verdict:
    N = A.shape[0]
    verdict = Verdict()
    w = ""
    for b in range(N // block_size):
        sl = slice(b * block_size, (b + 1) * block_size)
        if A[sl, sl].any():
            w = f"block {b} contains an edge"
            break
    verdict.add("srg.coclique_partition", not w, w)
    return verdict
