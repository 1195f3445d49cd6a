"""Single-bit corruptions of verified artifacts must be rejected with a witness.

The ``corrupt_*`` helpers return how many of ``N_CORRUPTIONS`` corruptions were
rejected; the acceptance suite reuses them.
"""

import contextlib
import io

import numpy as np
import pytest

from bushtype.cli import main

N_CORRUPTIONS = 100


def build_artifacts(out):
    with contextlib.redirect_stdout(io.StringIO()):
        assert main(["build", "--m", "3", "--format", "packed", "--out", str(out)]) == 0
    return out


def flip_bit(data: bytes, byte_index: int, bit: int) -> bytes:
    b = bytearray(data)
    b[byte_index] ^= 1 << bit
    return bytes(b)


def line_byte_ranges(data: bytes, keep):
    """Byte offsets of the lines for which ``keep(line)`` holds, newlines included."""
    out, pos = [], 0
    for line in data.split(b"\n"):
        if keep(line):
            out.extend(range(pos, pos + len(line) + 1))
        pos += len(line) + 1
    return [i for i in out if i < len(data)]


def verify(path, level):
    buf = io.StringIO()
    with contextlib.redirect_stdout(buf):
        code = main(["verify", str(path), "--verify", level])
    fails = [line for line in buf.getvalue().splitlines() if line.startswith("FAIL ")]
    return code, fails


def has_witness(fails):
    return any(len(parts := line.split(" ", 2)) == 3 and parts[2].strip() for line in fails)


def _rejected(path, level, codes=(1, 3)):
    code, fails = verify(path, level)
    return code in codes and has_witness(fails)


def corrupt_matrix(good, workdir, seed=101):
    """Flip one entry of the packed order-324 matrix; the witness must name its row or column."""
    src = (good / "bush_m3.bin").read_bytes()
    order, words = 324, (324 + 63) // 64
    rng = np.random.default_rng(seed)
    rejected = 0
    for trial in range(N_CORRUPTIONS):
        i, j = (int(x) for x in rng.integers(0, order, size=2))
        path = workdir / f"m{trial}.bin"
        path.write_bytes(flip_bit(src, 12 + i * words * 8 + j // 8, j % 8))
        code, fails = verify(path, "bush-full")
        text = " ".join(fails)
        named = any(s in text for s in (f"({i},{j})", f"({j},{i})", f"row={i}", f"vertex={i}", f"rows=("))
        rejected += code == 1 and has_witness(fails) and named
    return rejected


def corrupt_members(good, workdir, seed=202):
    """Flip one bit inside a member line of the difference-set bundle."""
    src = (good / "hds_m3.gset").read_bytes()
    positions = line_byte_ranges(src, lambda line: b";" in line)
    rng = np.random.default_rng(seed)
    rejected = 0
    for trial in range(N_CORRUPTIONS):
        path = workdir / f"s{trial}.gset"
        path.write_bytes(flip_bit(src, int(rng.choice(positions)), int(rng.integers(0, 8))))
        rejected += _rejected(path, "hds")
    return rejected


def corrupt_certificate(good, workdir, seed=303):
    """Flip one bit inside the C0, C1 or labeling line of the type-Q certificate."""
    src = (good / "typeq_p3.cert").read_bytes()
    positions = line_byte_ranges(src, lambda line: line.startswith((b"C0:", b"C1:", b"labeling:")))
    rng = np.random.default_rng(seed)
    rejected = 0
    for trial in range(N_CORRUPTIONS):
        path = workdir / f"c{trial}.cert"
        path.write_bytes(flip_bit(src, int(rng.choice(positions)), int(rng.integers(0, 8))))
        rejected += _rejected(path, "sizes")
    return rejected


@pytest.fixture(scope="module")
def good(tmp_path_factory):
    return build_artifacts(tmp_path_factory.mktemp("good"))


def test_uncorrupted_artifacts_pass(good):
    for name, level in (("bush_m3.bin", "bush-full"), ("hds_m3.gset", "hds"), ("typeq_p3.cert", "sizes")):
        assert verify(good / name, level) == (0, [])


def test_matrix_entry_corruptions(good, tmp_path):
    assert corrupt_matrix(good, tmp_path) == N_CORRUPTIONS


def test_set_member_corruptions(good, tmp_path):
    assert corrupt_members(good, tmp_path) == N_CORRUPTIONS


def test_certificate_line_corruptions(good, tmp_path):
    assert corrupt_certificate(good, tmp_path) == N_CORRUPTIONS


def test_witness_detection():
    assert has_witness(["FAIL bush.symmetry entry (1,2) != entry (2,1)"])
    assert not has_witness(["FAIL bush.symmetry"])
    assert not has_witness([])
