import numpy as np
import pytest

from bushtype.bushmat import load_matrix, order4_base
from bushtype.cli import main
from bushtype.hds import HdsBundle
from bushtype.typeq import SpreadCertificate


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def keys(out):
    return dict(line.split(" ", 1) for line in out.splitlines() if line and line[0].isupper() and " " in line and not line.startswith(("PASS", "FAIL")))


def test_build_m1(tmp_path, capsys):
    code, out, _ = run(capsys, "build", "--m", 1, "--out", tmp_path)
    assert code == 0
    assert load_matrix(tmp_path / "bush_m1.txt") == order4_base()
    text = (tmp_path / "bush_m1.txt").read_text()
    assert "# config command=build m=1 seed=0" in text
    assert "RESULT pass" in out and "FAIL" not in out


def test_build_m3_bush_full(tmp_path, capsys):
    code, out, _ = run(capsys, "build", "--m", 3, "--verify", "bush-full", "--out", tmp_path)
    assert code == 0, out
    k = keys(out)
    assert k["ORDER"] == "324" and k["BLOCK"] == "18" and k["SEED"] == "0" and k["BUDGET"] == "1000000"
    for name in ("bush.symmetry", "bush.diagonal_blocks", "bush.offdiagonal_row_sums", "bush.orthogonality", "srg.parameters(324,153,72,72)", "ds.parameters(324,153,72)"):
        assert f"PASS {name}" in out.splitlines()
    report = (tmp_path / "build_m3.report").read_text()
    assert report.startswith("# bushtype ")
    for f in ("hds_m3.gset", "bush_m3.txt", "typeq_p3.cert"):
        assert "# config command=build m=3" in (tmp_path / f).read_text()


def test_build_rejects_even_m(tmp_path, capsys):
    code, _, err = run(capsys, "build", "--m", 4, "--out", tmp_path)
    assert code == 3
    assert "odd" in err


@pytest.mark.parametrize(
    "argv",
    [
        ["build"],
        ["build", "--m", "x"],
        ["build", "--m", "3", "--verify", "everything"],
        ["build", "--m", "3", "--seed", "-1"],
        ["build", "--m", "3", "--seed", str(2**64)],
        ["frobnicate"],
        ["design-params", "--m", "3", "--kind", "triplet"],
    ],
)
def test_usage_errors_exit_3(argv, capsys):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == 3


def test_budget_exhaustion_exit_2(tmp_path, capsys):
    code, out, _ = run(capsys, "build", "--m", 5, "--strategy", "backtracking", "--budget", 500, "--out", tmp_path)
    assert code == 2
    assert "FAIL construction BudgetExhausted" in out
    assert "BUDGET 500" in out


def test_search_typeq_and_reuse(tmp_path, capsys):
    cert_path = tmp_path / "p3.cert"
    code, out, _ = run(capsys, "search-typeq", "--p", 3, "--strategy", "randomized-restart", "--seed", 9, "--out", cert_path)
    assert code == 0 and "NODES" in out
    assert SpreadCertificate.load(cert_path).p == 3
    code, out, _ = run(capsys, "build", "--m", 3, "--typeq", cert_path, "--out", tmp_path / "b")
    assert code == 0 and "TYPEQ_P3 loaded" in out
    code, out, _ = run(capsys, "search-typeq", "--p", 9)
    assert code == 3


def test_search_typeq_budget(capsys):
    code, out, _ = run(capsys, "search-typeq", "--p", 5, "--strategy", "backtracking", "--budget", 100)
    assert code == 2
    assert keys(out)["NODES"] == "100"


@pytest.fixture(scope="module")
def artifacts(tmp_path_factory):
    out = tmp_path_factory.mktemp("art")
    assert main(["build", "--m", "3", "--out", str(out)]) == 0
    assert main(["build", "--m", "5", "--out", str(out)]) == 0
    return out


@pytest.mark.parametrize("name", ["hds_m3.gset", "bush_m3.txt", "typeq_p3.cert", "hds_m5.gset", "bush_m5.txt"])
def test_every_artifact_reverifies(artifacts, name, capsys):
    code, out, _ = run(capsys, "verify", artifacts / name, "--verify", "bush-full")
    assert code == 0, out
    assert "RESULT pass" in out


def test_verify_bundle_at_hds_level(artifacts, capsys):
    code, out, _ = run(capsys, "verify", artifacts / "hds_m3.gset", "--verify", "hds")
    assert code == 0
    assert "PASS ds.parameters(324,153,72)" in out and "PASS ds.reversible" in out


def test_verify_corrupted_matrix(artifacts, tmp_path, capsys):
    rows = (artifacts / "bush_m3.txt").read_text().split("\n")
    body = [i for i, r in enumerate(rows) if r[:1] in "+-" and r]
    r = list(rows[body[40]])
    r[7] = "+" if r[7] == "-" else "-"
    rows[body[40]] = "".join(r)
    bad = tmp_path / "bad.txt"
    bad.write_text("\n".join(rows))
    code, out, _ = run(capsys, "verify", bad, "--verify", "bush-full")
    assert code == 1
    assert "FAIL bush.symmetry entry (7,40) != entry (40,7)" in out


def test_verify_unparseable(tmp_path, capsys):
    p = tmp_path / "x.txt"
    p.write_text("hello\n")
    code, out, _ = run(capsys, "verify", p)
    assert code == 3 and out.startswith("FAIL parse")
    p.write_text("BUSH v1 order=4 block=2\n+++-\n++-+\n+-+?\n-+++\n")
    code, out, _ = run(capsys, "verify", p)
    assert code == 3 and "line 4" in out and "column 4" in out


def test_compose_matches_build(artifacts, tmp_path, capsys):
    out = tmp_path / "c.gset"
    code, text, _ = run(capsys, "compose", artifacts / "hds_m5.gset", artifacts / "hds_m3.gset", "--out", out)
    assert code == 0, text
    assert "W 225" in text
    assert main(["build", "--m", "15", "--out", str(tmp_path / "b15")]) == 0
    capsys.readouterr()
    built = HdsBundle.load(tmp_path / "b15" / "hds_m15.gset")
    composed = HdsBundle.load(out)
    assert built.subset == composed.subset
    assert np.array_equal(built.subgroups["QP"].elements, composed.subgroups["QP"].elements)
    assert built.fields == composed.fields
    code, text, _ = run(capsys, "verify", out, "--verify", "sizes")
    assert code == 0 and "PASS bundle.QP.order" in text


def test_compose_requires_prime_first(artifacts, tmp_path, capsys):
    c = tmp_path / "c.gset"
    assert main(["compose", str(artifacts / "hds_m3.gset"), str(artifacts / "hds_m3.gset"), "--out", str(c)]) == 0
    code, _, _ = run(capsys, "compose", c, artifacts / "hds_m3.gset", "--out", tmp_path / "d.gset")
    assert code == 3


def test_export_roundtrip(artifacts, tmp_path, capsys):
    packed = tmp_path / "m.bin"
    ascii_ = tmp_path / "m.txt"
    assert run(capsys, "export", artifacts / "bush_m3.txt", "--format", "packed", "--out", packed)[0] == 0
    assert packed.read_bytes()[:8] == b"BUSHMAT1"
    assert "# config command=export" in (tmp_path / "m.bin.cfg").read_text()
    assert run(capsys, "export", packed, "--format", "ascii", "--out", ascii_)[0] == 0
    assert load_matrix(ascii_) == load_matrix(artifacts / "bush_m3.txt")


def test_design_params_cli(capsys):
    code, out, _ = run(capsys, "design-params", "--m", 3, "--ell", 1, "--kind", "twin")
    assert code == 0
    k = keys(out)
    assert (k["V"], k["K"], k["LAMBDA"], k["Q_PRIME_POWER"]) == ("93960", "44217", "20808", "yes")
    code, _, _ = run(capsys, "design-params", "--m", 1, "--kind", "siamese", "--q", 8)
    assert code == 3


def test_threads_do_not_change_reports(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    run(capsys, "build", "--m", 3, "--verify", "bush-full", "--out", a)
    run(capsys, "build", "--m", 3, "--verify", "bush-full", "--threads", 4, "--out", b)
    strip = lambda p: [l for l in p.read_text().splitlines() if not l.startswith("THREADS")]
    assert strip(a / "build_m3.report") == strip(b / "build_m3.report")
    assert (a / "bush_m3.txt").read_bytes() == (b / "bush_m3.txt").read_bytes()
