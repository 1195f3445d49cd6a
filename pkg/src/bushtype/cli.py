"""Command-line front end.

Exit codes: 0 all requested checks passed, 1 a verification failed,
2 construction failed, 3 usage or parse error.

Every report is line-oriented: ``KEY value`` lines, then one
``PASS name`` / ``FAIL name witness`` line per check.
"""

from __future__ import annotations

import argparse
import hashlib
import math
import sys
from pathlib import Path

from . import __version__
from .algebra import build_field, is_prime
from .bushmat import (
    MAGIC,
    BushMatrix,
    assemble_bush,
    connection_set,
    load_matrix,
    order4_base,
    verify_bush,
    verify_delsarte_property,
    verify_srg,
)
from .designs import KINDS, design_params
from .errors import BushError, ParseError, SizeMismatch
from .geometry import regular_spread
from .groupring import GroupSubset
from .hds import CertifiedSubgroup, HdsBundle, build_blocks, find_P, find_Q, prime_bundle, verify_blocks, verify_hds, verify_subgroup
from .turyn import ComposedBlocks, arrange_as_E1, arrange_as_E2, build_for_m, compose
from .typeq import STRATEGIES, SpreadCertificate, search_spread_pair, verify_certificate
from .verdict import Verdict

EXIT_OK, EXIT_VERIFY, EXIT_CONSTRUCT, EXIT_USAGE = 0, 1, 2, 3
LEVELS = ("sizes", "hds", "srg", "bush-full")
FORMATS = ("auto", "ascii", "packed")
# ascii rows cost one byte per entry; above this order "auto" switches to packed
ASCII_ORDER_LIMIT = 4096
# no matrix file is written above this order (m = 15 would need ~5 GB packed)
MATRIX_ORDER_LIMIT = 1 << 15
DEFAULT_BUDGET = 10**6


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _seed(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _positive(text: str) -> int:
    value = int(text, 0)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


class Report:
    """Collects KEY lines and check lines; written to stdout and optionally to a file."""

    def __init__(self):
        self.keys: list[tuple[str, str]] = []
        self.checks = Verdict()

    def key(self, name: str, value) -> None:
        self.keys.append((name, str(value)))

    def extend(self, verdict: Verdict, prefix: str = "") -> None:
        self.checks.extend(verdict, prefix)

    def lines(self) -> list[str]:
        out = [f"{k} {v}" for k, v in self.keys]
        out += self.checks.lines()
        out.append(f"RESULT {'pass' if self.checks.ok else 'fail'}")
        return out

    def text(self, comments=()) -> str:
        return "".join(f"# {c}\n" for c in comments) + "\n".join(self.lines()) + "\n"

    def emit(self, path=None, comments=()) -> None:
        text = self.text(comments)
        sys.stdout.write(text)
        if path is not None:
            Path(path).write_text(text)


def _config_comments(args, fields) -> list[str]:
    """Header comments recording every setting that affects file contents."""
    parts = [f"command={args.command}"] + [f"{k}={getattr(args, k)}" for k in fields]
    return [f"bushtype {__version__}", "config " + " ".join(parts)]


def _resolve_format(fmt: str, order: int) -> str:
    if fmt != "auto":
        return fmt
    return "ascii" if order <= ASCII_ORDER_LIMIT else "packed"


def _matrix_name(stem: str, fmt: str) -> str:
    return f"{stem}.{'txt' if fmt == 'ascii' else 'bin'}"


def _save_matrix(H: BushMatrix, path: Path, fmt: str, comments) -> None:
    H.save(path, fmt, comments)
    if fmt == "packed":
        # the binary layout has no room for comments; record them beside it
        digest = hashlib.sha256(path.read_bytes()).hexdigest()
        path.with_name(path.name + ".cfg").write_text("".join(f"# {c}\n" for c in comments) + f"SHA256 {digest}\n")


def _certificates(args, report: Report):
    given = {}
    for path in args.typeq or ():
        cert = SpreadCertificate.load(path)
        given[cert.p] = cert

    cache = {}

    def get(p):
        if p not in cache:
            if p in given:
                cert = given[p]
                report.key(f"TYPEQ_P{p}", "loaded")
            else:
                cert = search_spread_pair(regular_spread(build_field(p)), args.strategy, args.seed, args.budget)
                report.key(f"TYPEQ_P{p}", f"searched nodes={cert.nodes}")
            report.extend(verify_certificate(cert), f"typeq.p{p}.")
            cache[p] = cert
        return cache[p]

    return get, cache


def bundle_for_build(result) -> HdsBundle:
    if len(result.levels) == 1:
        level = next(iter(result.primes.values()))
        bundle = prime_bundle(level.blocks, level.P, level.Q)
        bundle.fields["klein"] = "0 2"
        return bundle
    composed = ComposedBlocks(result.hds.ctx, result.blocks, result.subgroup, result.m * result.m)
    return composite_bundle(composed, result.klein_pair)


def composite_bundle(composed: ComposedBlocks, klein_pair=(2, 3)) -> HdsBundle:
    fields = {"w": str(composed.w), "klein": " ".join(map(str, klein_pair))}
    return HdsBundle(composed.subset(), {"QP": composed.qp}, fields)


def _bundle_subgroup(bundle: HdsBundle) -> tuple[CertifiedSubgroup, tuple[int, int]]:
    """Subgroup and Klein pair that drive the Bush step for a bundle."""
    klein = tuple(int(x) for x in bundle.fields.get("klein", "").split())
    if len(klein) != 2:
        raise ParseError("bundle lacks a 'klein: i j' field")
    sub = bundle.subgroups.get("QP") or bundle.subgroups.get("P")
    if sub is None:
        raise ParseError("bundle lacks a P or QP subgroup line")
    return sub, klein


def _hds_order(subset: GroupSubset) -> int:
    n = math.isqrt(subset.ctx.total_order // 4)
    if 4 * n * n != subset.ctx.total_order:
        raise ParseError(f"group order {subset.ctx.total_order} is not 4n^2")
    return n


def _verify_bundle(bundle: HdsBundle, level: str, threads: int, report: Report) -> BushMatrix | None:
    S = bundle.subset
    n = _hds_order(S)
    report.key("ORDER", S.ctx.total_order)
    report.key("SIZE", S.size)
    small, large = (n * n - n) // 2, (n * n + n) // 2
    sizes = tuple(int(S.block(i).sum()) for i in range(4))
    report.checks.add("bundle.block_multiset", sorted(sizes) == [small, small, small, large], f"sizes={sizes}")
    for name, sub in bundle.subgroups.items():
        report.extend(verify_subgroup(sub, S.blocks(), n), "bundle.")
    H = None
    if LEVELS.index(level) >= 1:
        v, k, lam = 4 * n * n, 2 * n * n - n, n * n - n
        try:
            report.extend(verify_hds(S, n, threads))
        except SizeMismatch as exc:
            report.checks.add(f"ds.parameters({v},{k},{lam})", False, str(exc))
    if LEVELS.index(level) >= 2:
        sub, klein = _bundle_subgroup(bundle)
        report.key("KLEIN", f"{klein[0]} {klein[1]}")
        Ep = connection_set(S, klein[0])
        try:
            for line in verify_srg(Ep, threads).lines():
                report.checks.add(line.split()[1], line.startswith("PASS"), " ".join(line.split()[2:]))
        except BushError as exc:
            report.checks.add("srg.connection_set", False, str(exc))
        if level == "bush-full":
            try:
                H = assemble_bush(S, sub, klein)
            except BushError as exc:
                report.checks.add("bush.assemble", False, str(exc))
            else:
                report.extend(verify_bush(H, threads))
                report.extend(verify_delsarte_property(H))
    return H


def _verify_matrix(H: BushMatrix, threads: int, report: Report) -> None:
    report.key("ORDER", H.order)
    report.key("BLOCK", H.block_size)
    report.extend(verify_bush(H, threads))
    if H.block_size > 0 and H.order == H.block_size**2:
        report.extend(verify_delsarte_property(H))


# commands


def cmd_build(args) -> int:
    m = args.m
    if m < 1 or m % 2 == 0:
        raise UsageError(f"m must be an odd positive integer, got {m}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    comments = _config_comments(args, ("m", "seed", "budget", "strategy", "verify", "format"))
    report = Report()
    for key in ("m", "seed", "budget", "strategy", "verify", "format", "threads"):
        report.key(key.upper(), getattr(args, key))
    report_path = out / f"build_m{m}.report"

    if m == 1:
        H = order4_base()
        fmt = _resolve_format(args.format, H.order)
        path = out / _matrix_name("bush_m1", fmt)
        _save_matrix(H, path, fmt, comments)
        report.key("ORDER", H.order)
        report.key("MATRIX", path.name)
        report.extend(verify_bush(H, args.threads))
        report.emit(report_path, comments)
        return EXIT_OK if report.checks.ok else EXIT_VERIFY

    get, certs = _certificates(args, report)
    try:
        result = build_for_m(m, get)
    except BushError as exc:
        report.key("ERROR", f"{type(exc).__name__}: {exc}")
        report.checks.add("construction", False, type(exc).__name__)
        report.emit(report_path, comments)
        return EXIT_CONSTRUCT
    if not report.checks.ok:
        report.emit(report_path, comments)
        return EXIT_VERIFY

    for p, cert in sorted(certs.items()):
        cert.save(out / f"typeq_p{p}.cert", comments)
    for p, level in sorted(result.primes.items()):
        report.extend(verify_blocks(level.blocks), f"p{p}.")
        report.extend(verify_subgroup(level.P, level.blocks.blocks, p * p), f"p{p}.")
        report.extend(verify_subgroup(level.Q, level.blocks.blocks, p * p), f"p{p}.")
    report.extend(result.checks)
    bundle = bundle_for_build(result)
    bundle_path = out / f"hds_m{m}.gset"
    bundle.save(bundle_path, comments)
    report.key("BUNDLE", bundle_path.name)
    report.key("SUBGROUP_ORDER", result.subgroup.order)

    # sizes-level checks on the bundle; deeper levels run on the matrix itself
    sub_level = args.verify if args.verify in ("sizes", "hds", "srg") else "srg"
    _verify_bundle(bundle, sub_level, args.threads, report)

    order = 4 * m**4
    if order > MATRIX_ORDER_LIMIT:
        report.key("MATRIX", f"skipped order {order} exceeds {MATRIX_ORDER_LIMIT}")
        if args.verify == "bush-full":
            report.checks.add("bush.matrix", False, f"order {order} exceeds the matrix limit {MATRIX_ORDER_LIMIT}")
    else:
        try:
            H = assemble_bush(result.hds, result.subgroup, result.klein_pair)
        except BushError as exc:
            report.key("ERROR", f"{type(exc).__name__}: {exc}")
            report.checks.add("bush.assemble", False, type(exc).__name__)
            report.emit(report_path, comments)
            return EXIT_CONSTRUCT
        fmt = _resolve_format(args.format, H.order)
        path = out / _matrix_name(f"bush_m{m}", fmt)
        _save_matrix(H, path, fmt, comments)
        report.key("MATRIX", path.name)
        report.key("BLOCK", H.block_size)
        if args.verify == "bush-full":
            report.extend(verify_bush(H, args.threads))
            report.extend(verify_delsarte_property(H))
    report.emit(report_path, comments)
    return EXIT_OK if report.checks.ok else EXIT_VERIFY


def _text(data: bytes) -> str:
    try:
        return data.decode("ascii")
    except UnicodeDecodeError as exc:
        line = data[: exc.start].count(b"\n") + 1
        raise ParseError(f"non-ascii byte at offset {exc.start}", line) from None


def cmd_verify(args) -> int:
    path = Path(args.path)
    data = path.read_bytes()
    report = Report()
    report.key("FILE", path.name)
    report.key("VERIFY", args.verify)
    if data.startswith(MAGIC) or data.startswith(b"BUSH v1"):
        report.key("KIND", "matrix")
        _verify_matrix(load_matrix(path), args.threads, report)
    elif data.startswith(b"TYPEQ v1"):
        cert = SpreadCertificate.from_text(_text(data))
        report.key("KIND", "typeq")
        report.key("P", cert.p)
        if not is_prime(cert.p) or cert.p % 2 == 0:
            raise ParseError(f"p={cert.p} is not an odd prime", 1)
        report.extend(verify_certificate(cert))
    elif data.startswith(b"GSET v1"):
        bundle = HdsBundle.from_text(_text(data))
        report.key("KIND", "bundle")
        _verify_bundle(bundle, args.verify, args.threads, report)
    else:
        raise ParseError("unrecognised file header", 1)
    report.emit(args.report)
    return EXIT_OK if report.checks.ok else EXIT_VERIFY


def _prime_blocks(bundle: HdsBundle):
    """Rebuild prime-level blocks from the certificate fields and check them against the stored set."""
    f = bundle.fields
    try:
        p = int(f["p"])
        cert = SpreadCertificate(
            p,
            tuple(int(x) for x in f["C0"].split()),
            tuple(int(x) for x in f["C1"].split()),
            tuple(int(x) for x in f["labeling"].split()),
        )
        a = tuple(int(x) for x in f["A"].split())
        b = tuple(int(x) for x in f["B"].split())
    except (KeyError, ValueError) as exc:
        raise ParseError(f"prime-level bundle field missing or malformed: {exc}") from None
    blocks = build_blocks(cert, a, b)
    if GroupSubset.from_blocks(blocks.ctx, blocks.blocks) != bundle.subset:
        raise ParseError("stored set disagrees with the set rebuilt from its certificate")
    return blocks, find_P(cert, blocks), find_Q(cert, blocks)


def cmd_compose(args) -> int:
    first = HdsBundle.load(args.first)
    second = HdsBundle.load(args.second)
    report = Report()
    report.key("E1", Path(args.first).name)
    report.key("E2", Path(args.second).name)
    if "p" not in first.fields:
        raise UsageError("the first bundle must be prime-level (it supplies Q)")
    try:
        blocks1, _, Q = _prime_blocks(first)
        E1 = arrange_as_E1(blocks1, Q)
        if "p" in second.fields:
            blocks2, P, _ = _prime_blocks(second)
            E2 = arrange_as_E2(blocks2, P)
        else:
            sub, _ = _bundle_subgroup(second)
            S = second.subset
            w = math.isqrt(S.ctx.w_order)
            E2 = arrange_as_E2(ComposedBlocks(S.ctx, S.blocks(), sub, w))
        composed = compose(E1, E2)
    except BushError as exc:
        if isinstance(exc, ParseError):
            raise
        report.key("ERROR", f"{type(exc).__name__}: {exc}")
        report.checks.add("compose", False, type(exc).__name__)
        report.emit()
        return EXIT_CONSTRUCT
    report.extend(composed.checks)
    bundle = composite_bundle(composed)
    comments = _config_comments(args, ()) + [f"E1={Path(args.first).name} E2={Path(args.second).name}"]
    bundle.save(args.out, comments)
    report.key("W", composed.w)
    report.key("OUT", Path(args.out).name)
    report.emit()
    return EXIT_OK if report.checks.ok else EXIT_VERIFY


def cmd_search_typeq(args) -> int:
    p = args.p
    if not is_prime(p) or p % 2 == 0:
        raise UsageError(f"p must be an odd prime, got {p}")
    report = Report()
    for key in ("p", "seed", "budget", "strategy"):
        report.key(key.upper(), getattr(args, key))
    try:
        cert = search_spread_pair(regular_spread(build_field(p)), args.strategy, args.seed, args.budget)
    except BushError as exc:
        report.key("ERROR", f"{type(exc).__name__}: {exc}")
        report.key("NODES", getattr(exc, "nodes", 0))
        report.checks.add("typeq.search", False, type(exc).__name__)
        report.emit()
        return EXIT_CONSTRUCT
    report.key("NODES", cert.nodes)
    report.extend(verify_certificate(cert))
    if args.out:
        cert.save(args.out, _config_comments(args, ("p", "seed", "budget", "strategy")))
        report.key("OUT", Path(args.out).name)
    report.emit()
    return EXIT_OK if report.checks.ok else EXIT_VERIFY


def cmd_design_params(args) -> int:
    if args.m < 1 or args.m % 2 == 0:
        raise UsageError(f"m must be an odd positive integer, got {args.m}")
    d = design_params(args.m, args.ell, args.kind)
    if args.q is not None and args.q != d.q:
        raise UsageError(f"q={args.q} does not match (2m^2{'-' if args.kind == 'twin' else '+'}1)^2 = {d.q}")
    sys.stdout.write("\n".join(d.lines()) + "\n")
    return EXIT_OK


def cmd_export(args) -> int:
    src = Path(args.path)
    H = load_matrix(src)
    fmt = _resolve_format(args.format, H.order)
    out = Path(args.out)
    _save_matrix(H, out, fmt, _config_comments(args, ("format",)) + [f"source={src.name}"])
    report = Report()
    report.key("ORDER", H.order)
    report.key("FORMAT", fmt)
    report.key("OUT", out.name)
    report.emit()
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bushtype", description="Symmetric Bush-type Hadamard matrices of order 4m^4.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def search_flags(sp):
        sp.add_argument("--seed", type=_seed, default=0)
        sp.add_argument("--budget", type=_positive, default=DEFAULT_BUDGET, help="search node budget per prime")
        sp.add_argument("--strategy", choices=STRATEGIES, default="cyclotomic-first")

    b = sub.add_parser("build", help="construct and verify the order-4m^4 matrix")
    b.add_argument("--m", type=int, required=True)
    search_flags(b)
    b.add_argument("--verify", choices=LEVELS, default="sizes")
    b.add_argument("--format", choices=FORMATS, default="auto")
    b.add_argument("--threads", type=_positive, default=1)
    b.add_argument("--out", default=".", help="output directory")
    b.add_argument("--typeq", action="append", metavar="CERT", help="use a saved type-Q certificate instead of searching")
    b.set_defaults(func=cmd_build)

    v = sub.add_parser("verify", help="re-verify a certificate, bundle or matrix file")
    v.add_argument("path")
    v.add_argument("--verify", choices=LEVELS, default="hds")
    v.add_argument("--threads", type=_positive, default=1)
    v.add_argument("--out", dest="report", default=None, help="also write the report here")
    v.set_defaults(func=cmd_verify)

    c = sub.add_parser("compose", help="compose a prime-level bundle with a second bundle")
    c.add_argument("first", help="prime-level bundle used as E1")
    c.add_argument("second", help="prime-level or composite bundle used as E2")
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_compose)

    s = sub.add_parser("search-typeq", help="search a spread-adapted type-Q pair")
    s.add_argument("--p", type=int, required=True)
    search_flags(s)
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_search_typeq)

    d = sub.add_parser("design-params", help="parameters of the derived symmetric designs")
    d.add_argument("--m", type=int, required=True)
    d.add_argument("--ell", type=_positive, default=1)
    d.add_argument("--kind", choices=KINDS, default="twin")
    d.add_argument("--q", type=int, default=None, help="optional cross-check of the derived q")
    d.set_defaults(func=cmd_design_params)

    e = sub.add_parser("export", help="convert a matrix between ascii and packed formats")
    e.add_argument("path")
    e.add_argument("--format", choices=FORMATS, default="auto")
    e.add_argument("--out", required=True)
    e.set_defaults(func=cmd_export)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"bushtype: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ParseError as exc:
        print(f"FAIL parse {exc}")
        return EXIT_USAGE
    except OSError as exc:
        print(f"bushtype: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
