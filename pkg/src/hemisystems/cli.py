"""Command-line surface: stats, orbits, construct, verify, selftest.

Exit codes form a stable contract for CI:

* 0 -- verified / success,
* 1 -- rejected (a certificate or construction failed verification),
* 2 -- usage or parse error (bad flags, malformed file, header mismatch).

Certificates are line-oriented text.  Header lines carry the field, the
rank, the Gram matrix, the expected counts, and the generators of the
orbit group; then one ``maximal`` line per member holding its RREF basis
matrix in row-major serialization; then the mask; then ``end``.  The
verifier rebuilds the whole geometry from the header and re-derives every
member id from its matrix -- a certificate is a claim, not a proof, until
re-checked.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field as dataclass_field

import numpy as np

from .gf import Field, field_make
from .groups import w_vector_orbits
from .hemi import Prepared, assemble, prepare, verify_hemisystem
from .linform import (
    Subspace,
    format_matrix,
    mat_mul,
    parse_matrix,
    standard_model,
    witt_index,
)
from .orbits import ActionEscape
from .quadric import QuadricModel, maximal_count, point_count

CERT_MAGIC = "hemisystem-certificate"
CERT_VERSION = 1


class ParseError(ValueError):
    """The certificate file (or a flag value) is not well-formed."""


class ModelMismatch(ValueError):
    """A certificate header disagrees with the recomputed geometry."""


class VerificationFailed(RuntimeError):
    """A freshly assembled hemisystem failed its own verification."""


# ---------------------------------------------------------------------------
# run configuration


@dataclass(frozen=True)
class RunConfig:
    """Validated knobs shared by every command."""

    p: int = 3
    k: int = 1
    modulus: tuple | None = None
    d: int = 2
    mask: str = "0"
    out: str = "-"
    format: str = "text"
    cap: int = 2**16
    jobs: int = 1
    path: str | None = None

    def make_field(self) -> Field:
        return field_make(self.p, self.k, self.modulus)


def _parse_mask(text: str) -> int:
    s = text.strip().lower()
    if s.startswith("0x"):
        s = s[2:]
    if not s:
        raise ParseError("mask is empty")
    try:
        value = int(s, 16)
    except ValueError:
        raise ParseError(f"mask {text!r} is not hexadecimal") from None
    return value


def _parse_modulus(text: str) -> tuple:
    try:
        return tuple(int(t) for t in text.split(","))
    except ValueError:
        raise ParseError(
            f"modulus {text!r} must be comma-separated integers (low degree first)"
        ) from None


# ---------------------------------------------------------------------------
# certificate serialization


def certificate_text(prep: Prepared, mask: int, member_ids: np.ndarray) -> str:
    """Serialize one verified hemisystem as a line-oriented certificate."""
    F = prep.field
    split = prep.report.split
    lines = [f"{CERT_MAGIC} {CERT_VERSION}"]
    lines.append(f"field {F.p} {F.k} {','.join(str(c) for c in F.modulus)}")
    lines.append(f"rank {prep.model.d}")
    lines.append(f"gram {format_matrix(F, prep.model.space.gram)}")
    lines.append(f"counts {prep.qm.num_points} {prep.qm.num_maximals}")
    lines.append(f"degree {prep.qm.target_degree}")
    lines.append(f"orbits {len(split.pairs)} {split.partition.n_orbits}")
    for g in prep.b.generators:
        lines.append(f"generator {format_matrix(F, g.mat)}")
    for i in member_ids:
        lines.append(f"maximal {format_matrix(F, prep.qm.maximal_bases[int(i)])}")
    lines.append(f"mask {mask:x} {len(split.pairs)}")
    lines.append("end")
    return "\n".join(lines) + "\n"


@dataclass
class Certificate:
    """Parsed form of a certificate file; nothing in it is trusted yet."""

    field: Field
    d: int
    gram: np.ndarray
    num_points: int
    num_maximals: int
    degree: int
    m: int
    n_b: int
    generators: list = dataclass_field(default_factory=list)
    members: list = dataclass_field(default_factory=list)
    mask: int = 0


def parse_certificate(text: str) -> Certificate:
    """Parse certificate text; raise ParseError on any structural defect."""
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise ParseError("empty certificate")

    def split_line(i: int, tag: str, n_fields: int) -> list[str]:
        if i >= len(lines):
            raise ParseError(f"truncated certificate: missing {tag!r} line")
        parts = lines[i].split()
        if parts[0] != tag:
            raise ParseError(f"line {i + 1}: expected {tag!r}, got {parts[0]!r}")
        if len(parts) != n_fields + 1:
            raise ParseError(f"line {i + 1}: {tag!r} takes {n_fields} fields")
        return parts[1:]

    def as_int(token: str, what: str) -> int:
        try:
            return int(token)
        except ValueError:
            raise ParseError(f"{what} {token!r} is not an integer") from None

    magic = split_line(0, CERT_MAGIC, 1)
    if as_int(magic[0], "version") != CERT_VERSION:
        raise ParseError(f"unsupported certificate version {magic[0]}")

    p_s, k_s, mod_s = split_line(1, "field", 3)
    p, k = as_int(p_s, "p"), as_int(k_s, "k")
    modulus = _parse_modulus(mod_s)
    try:
        F = field_make(p, k, modulus)
    except ValueError as exc:
        raise ParseError(f"bad field header: {exc}") from None

    d = as_int(split_line(2, "rank", 1)[0], "rank")
    if d < 2:
        raise ParseError(f"rank {d} out of range")
    dim = 2 * d + 1

    def matrix(token: str, rows: int, what: str) -> np.ndarray:
        try:
            M = parse_matrix(F, token)
        except ValueError as exc:
            raise ParseError(f"bad {what} matrix: {exc}") from None
        if M.shape != (rows, dim):
            raise ParseError(f"{what} matrix must be {rows}x{dim}, got {M.shape}")
        return M

    gram = matrix(split_line(3, "gram", 1)[0], dim, "gram")
    np_s, nm_s = split_line(4, "counts", 2)
    num_points, num_maximals = as_int(np_s, "points"), as_int(nm_s, "maximals")
    degree = as_int(split_line(5, "degree", 1)[0], "degree")
    m_s, nb_s = split_line(6, "orbits", 2)
    m, n_b = as_int(m_s, "m"), as_int(nb_s, "n_b")

    cert = Certificate(F, d, gram, num_points, num_maximals, degree, m, n_b)

    i = 7
    while i < len(lines) and lines[i].startswith("generator "):
        cert.generators.append(matrix(split_line(i, "generator", 1)[0], dim, "generator"))
        i += 1
    while i < len(lines) and lines[i].startswith("maximal "):
        cert.members.append(matrix(split_line(i, "maximal", 1)[0], d, "maximal"))
        i += 1
    if not cert.members:
        raise ParseError("certificate lists no maximals")

    mask_s, mbits_s = split_line(i, "mask", 2)
    cert.mask = _parse_mask(mask_s)
    if as_int(mbits_s, "mask width") != m:
        raise ParseError("mask width disagrees with the orbits header")
    if cert.mask >= 2**m:
        raise ParseError(f"mask has more than {m} bits")
    i += 1
    split_line(i, "end", 0)
    if i + 1 != len(lines):
        raise ParseError("trailing lines after 'end'")
    return cert


def check_certificate_header(cert: Certificate, qm: QuadricModel) -> None:
    """Raise ModelMismatch when the header disagrees with the geometry."""
    F = cert.field
    gram = qm.model.space.gram
    if not np.array_equal(cert.gram, gram):
        raise ModelMismatch("Gram header differs from the standard-basis form")
    if cert.num_points != qm.num_points or cert.num_maximals != qm.num_maximals:
        raise ModelMismatch(
            f"counts header {cert.num_points}/{cert.num_maximals} differ from "
            f"recomputed {qm.num_points}/{qm.num_maximals}"
        )
    if cert.degree != qm.target_degree:
        raise ModelMismatch(
            f"degree header {cert.degree} differs from (t+1)/2 = {qm.target_degree}"
        )
    if cert.n_b != 2 * cert.m:
        raise ModelMismatch("orbits header violates n_b = 2m")
    for idx, M in enumerate(cert.generators):
        if not np.array_equal(mat_mul(F, mat_mul(F, M, gram), M.T), gram):
            raise ModelMismatch(f"generator {idx} is not an isometry of the form")


def resolve_members(cert: Certificate, qm: QuadricModel):
    """Re-derive member ids from their matrices.

    Returns (ids, None) on success or (None, reason) when some claimed
    member is not a maximal of the quadric or appears twice.
    """
    ids = []
    for idx, M in enumerate(cert.members):
        try:
            ids.append(qm.maximal_id(Subspace(cert.field, M)))
        except ActionEscape:
            return None, f"member {idx} is not a maximal of the quadric"
    arr = np.asarray(ids, dtype=np.int64)
    if np.unique(arr).size != arr.size:
        return None, "duplicate members"
    return arr, None


# ---------------------------------------------------------------------------
# output helpers


def _emit(cfg: RunConfig, payload: dict, text_lines: list[str]) -> None:
    if cfg.format == "structured":
        print(json.dumps(payload, sort_keys=True))
    else:
        for line in text_lines:
            print(line)


def _histogram_text(histogram) -> str:
    return " ".join(f"{deg}:{count}" for deg, count in histogram) or "(empty)"


# ---------------------------------------------------------------------------
# commands


def cmd_stats(cfg: RunConfig) -> int:
    F = cfg.make_field()
    prep = prepare(F, cfg.d)
    qm, rep = prep.qm, prep.report
    m = len(rep.split.pairs)
    payload = {
        "command": "stats",
        "q": F.q,
        "p": F.p,
        "k": F.k,
        "d": cfg.d,
        "points": qm.num_points,
        "maximals": qm.num_maximals,
        "s_plus_1": qm.s1,
        "t_plus_1": qm.t1,
        "target_degree": qm.target_degree,
        "b_order": rep.b_order,
        "a_order": rep.a_order,
        "m": m,
        "n_b": rep.n_b_maximal_orbits,
    }
    _emit(
        cfg,
        payload,
        [
            f"q {F.q} (p {F.p}, k {F.k})  d {cfg.d}",
            f"points {qm.num_points}",
            f"maximals {qm.num_maximals}",
            f"s+1 {qm.s1}",
            f"t+1 {qm.t1}",
            f"(t+1)/2 {qm.target_degree}",
            f"|B| {rep.b_order}",
            f"|A| {rep.a_order}",
            f"m {m}",
            f"n_b {rep.n_b_maximal_orbits}",
        ],
    )
    return 0


def cmd_orbits(cfg: RunConfig) -> int:
    F = cfg.make_field()
    prep = prepare(F, cfg.d)
    rep = prep.report
    if not rep.ok:
        print(f"error: orbit split unavailable: {rep.witness}", file=sys.stderr)
        return 1
    split = rep.split
    part = split.partition
    m = len(split.pairs)
    shown = split.pairs[: cfg.cap]
    pair_rows = [
        {
            "pair": i,
            "low": int(lo),
            "high": int(hi),
            "size": int(part.sizes[lo]),
            "rep_low": int(part.reps[lo]),
            "rep_high": int(part.reps[hi]),
        }
        for i, (lo, hi) in enumerate(shown)
    ]
    payload = {
        "command": "orbits",
        "q": F.q,
        "d": cfg.d,
        "point_orbits": prep.actions.b_point_part.n_orbits,
        "m": m,
        "n_b": part.n_orbits,
        "family_size": str(2**m),
        "pairs": pair_rows,
    }
    lines = [
        f"q {F.q}  d {cfg.d}",
        f"point-orbits {prep.actions.b_point_part.n_orbits} (same under B and A)",
        f"maximal-orbits {part.n_orbits} under B, {m} under A",
        f"family 2^{m} = {2 ** m}",
    ]
    lines += [
        f"pair {r['pair']}: orbits {r['low']},{r['high']} size {r['size']}"
        f" reps {r['rep_low']},{r['rep_high']}"
        for r in pair_rows
    ]
    if m > len(shown):
        lines.append(f"... ({m - len(shown)} more pairs beyond --cap)")
    _emit(cfg, payload, lines)
    return 0


def cmd_construct(cfg: RunConfig) -> int:
    F = cfg.make_field()
    mask = _parse_mask(cfg.mask)
    prep = prepare(F, cfg.d)
    rep = prep.report
    if not rep.ok:
        raise VerificationFailed(f"orbit-splitting hypotheses failed: {rep.witness}")
    ids = assemble(rep.split, mask)
    verdict = verify_hemisystem(prep.qm, ids, jobs=cfg.jobs)
    if not verdict.ok:
        raise VerificationFailed(
            f"assembled set failed verification; histogram "
            f"{_histogram_text(verdict.histogram)}"
        )
    text = certificate_text(prep, mask, ids)
    summary = {
        "command": "construct",
        "q": F.q,
        "d": cfg.d,
        "mask": f"{mask:x}",
        "m": len(rep.split.pairs),
        "size": int(ids.size),
        "target_degree": prep.qm.target_degree,
        "ok": True,
        "out": cfg.out,
    }
    if cfg.out == "-":
        if cfg.format == "structured":
            summary["certificate"] = text
            print(json.dumps(summary, sort_keys=True))
        else:
            sys.stdout.write(text)
        return 0
    with open(cfg.out, "w", encoding="ascii") as fh:
        fh.write(text)
    _emit(
        cfg,
        summary,
        [
            f"verified: {ids.size} maximals, degree {prep.qm.target_degree}, "
            f"mask {mask:x} of {len(rep.split.pairs)} bits -> {cfg.out}"
        ],
    )
    return 0


def cmd_verify(cfg: RunConfig, qm: QuadricModel | None = None) -> int:
    if cfg.path in (None, "-"):
        text = sys.stdin.read()
    else:
        try:
            with open(cfg.path, "r", encoding="ascii") as fh:
                text = fh.read()
        except OSError as exc:
            raise ParseError(f"cannot read certificate: {exc}") from None
    cert = parse_certificate(text)
    if qm is None:
        qm = QuadricModel(standard_model(cert.field, cert.d))
    check_certificate_header(cert, qm)
    ids, reason = resolve_members(cert, qm)
    if ids is None:
        payload = {
            "command": "verify",
            "ok": False,
            "reason": reason,
            "size": len(cert.members),
            "expected_size": qm.num_maximals // 2,
        }
        _emit(cfg, payload, [f"rejected: {reason}"])
        return 1
    verdict = verify_hemisystem(qm, ids, slow=cfg.jobs > 1, jobs=cfg.jobs)
    payload = {
        "command": "verify",
        "ok": verdict.ok,
        "size": verdict.size,
        "expected_size": verdict.expected_size,
        "target_degree": verdict.target_degree,
        "histogram": [[int(a), int(b)] for a, b in verdict.histogram],
        "method": verdict.method,
    }
    if verdict.ok:
        _emit(
            cfg,
            payload,
            [
                f"verified: {verdict.size} maximals, every point on exactly "
                f"{verdict.target_degree}"
            ],
        )
        return 0
    _emit(
        cfg,
        payload,
        [
            f"rejected: size {verdict.size} (expected {verdict.expected_size}), "
            f"degree histogram {_histogram_text(verdict.histogram)}"
        ],
    )
    return 1


# ---------------------------------------------------------------------------
# selftest


def _selftest_checks(cfg: RunConfig):
    """Yield (name, callable) pairs in the canonical order.

    Each callable returns a detail string on success and raises on failure.
    Model and groups are built lazily once and shared by later checks.
    """
    F = cfg.make_field()
    state: dict = {}

    def prep() -> Prepared:
        if "prep" not in state:
            state["prep"] = prepare(F, cfg.d)
        return state["prep"]

    def field_axioms() -> str:
        q = F.q
        idx = np.arange(q, dtype=np.intp)
        A, M = F.add_table.astype(np.intp), F.mul_table.astype(np.intp)
        a, b, c = idx[:, None, None], idx[None, :, None], idx[None, None, :]
        assert np.array_equal(A, A.T) and np.array_equal(M, M.T)
        assert np.array_equal(A[0], idx) and np.array_equal(M[1], idx)
        assert (M[0] == 0).all()
        assert np.array_equal(A[A[a, b], c], A[a, A[b, c]])
        assert np.array_equal(M[M[a, b], c], M[a, M[b, c]])
        assert np.array_equal(M[a, A[b, c]], A[M[a, b], M[a, c]])
        assert all(F.add(x, F.neg(x)) == 0 for x in range(q))
        assert all(F.mul(x, F.inv(x)) == 1 for x in range(1, q))
        return f"GF({q}) axioms hold over all {q ** 3} triples"

    def polarization() -> str:
        sp = prep().model.space
        n, q = sp.gram.shape[0], F.q
        rng = np.random.default_rng(0)
        U = rng.integers(0, q, size=(256, n)).astype(np.uint8)
        V = rng.integers(0, q, size=(256, n)).astype(np.uint8)
        for u, v in zip(U, V):
            lhs = sp.beta(u, v)
            rhs = F.add(sp.kappa(F.add_table[u, v]), F.neg(F.add(sp.kappa(u), sp.kappa(v))))
            assert lhs == rhs
        for lam in range(q):
            for v in V[:16]:
                assert sp.kappa(F.mul_table[lam, v]) == F.mul(F.mul(lam, lam), sp.kappa(v))
        return "beta(u,v) = k(u+v) - k(u) - k(v) and k(lv) = l^2 k(v) on samples"

    def witt_indices() -> str:
        model = prep().model
        wv = witt_index(model.space)
        ww = witt_index(model.w_space)
        wu = witt_index(model.u_space)
        assert wv == cfg.d and ww == 1 and wu == cfg.d - 2
        return f"V:{wv} W:{ww} U:{wu}"

    def counts() -> str:
        qm = prep().qm
        q = F.q
        assert qm.num_points == point_count(q, cfg.d)
        assert qm.num_maximals == maximal_count(q, cfg.d)
        degs = np.bincount(qm.maximal_points.ravel(), minlength=qm.num_points)
        assert (degs == qm.t1).all()
        assert qm.maximal_points.shape[1] == qm.s1
        return (
            f"{qm.num_points} points, {qm.num_maximals} maximals, "
            f"s+1={qm.s1}, t+1={qm.t1}"
        )

    def w_singular_orbit_sizes() -> str:
        part = w_vector_orbits(prep().model, prep().b)
        sizes = sorted(int(s) for s in part.sizes)
        half = (F.q**2 - 1) // 2
        assert part.n_orbits == 2 and sizes == [half, half]
        return f"two orbits of size {half} on nonzero singular W-vectors"

    def group_orders() -> str:
        q = F.q
        rep = prep().report
        assert rep.b_order == q * (q**2 - 1) // 2
        assert rep.a_order == q * (q**2 - 1)
        return f"|B| = {rep.b_order}, |A| = {rep.a_order}"

    def tau_properties() -> str:
        rep = prep().report
        assert rep.tau_involution and rep.tau_outside_b and rep.b_normal_in_a
        return "tau^2 = 1, tau outside B, tau normalizes B"

    def ab_conditions() -> str:
        rep = prep().report
        assert rep.index_two and rep.point_orbits_match
        assert rep.orbit_pairing_complete
        assert rep.n_b_maximal_orbits == 2 * rep.n_a_maximal_orbits
        m = len(rep.split.pairs)
        assert rep.n_a_maximal_orbits == m
        return (
            f"index 2, shared point orbits, {rep.n_b_maximal_orbits} B-orbits "
            f"pair into {m} A-orbits"
        )

    def hemisystem_roundtrip() -> str:
        pr = prep()
        ids = assemble(pr.report.split, 0)
        text = certificate_text(pr, 0, ids)
        cert = parse_certificate(text)
        check_certificate_header(cert, pr.qm)
        back, reason = resolve_members(cert, pr.qm)
        assert reason is None and np.array_equal(np.sort(back), np.sort(ids))
        verdict = verify_hemisystem(pr.qm, back)
        assert verdict.ok
        return f"mask 0 certificate of {ids.size} maximals round-trips and verifies"

    yield "field-axioms", field_axioms
    yield "polarization", polarization
    yield "witt-indices", witt_indices
    yield "counts", counts
    yield "w-singular-orbits", w_singular_orbit_sizes
    yield "group-orders", group_orders
    yield "tau-properties", tau_properties
    yield "ab-conditions", ab_conditions
    yield "hemisystem-roundtrip", hemisystem_roundtrip


def cmd_selftest(cfg: RunConfig) -> int:
    results = []
    for name, check in _selftest_checks(cfg):
        try:
            detail = check()
            results.append({"name": name, "ok": True, "detail": detail})
        except Exception as exc:  # noqa: BLE001 - failures are the report
            results.append({"name": name, "ok": False, "detail": f"{type(exc).__name__}: {exc}"})
    ok = all(r["ok"] for r in results)
    payload = {
        "command": "selftest",
        "q": cfg.p**cfg.k,
        "d": cfg.d,
        "ok": ok,
        "checks": results,
    }
    lines = [
        f"{'pass' if r['ok'] else 'FAIL'} {r['name']}: {r['detail']}" for r in results
    ]
    lines.append(f"selftest {'passed' if ok else 'FAILED'} ({len(results)} checks)")
    _emit(cfg, payload, lines)
    return 0 if ok else 1


# ---------------------------------------------------------------------------
# argument parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # noqa: D102 - argparse hook
        raise ParseError(message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--p", type=int, default=3, help="field characteristic (odd prime)")
    common.add_argument("--k", type=int, default=1, help="extension degree")
    common.add_argument(
        "--modulus",
        type=str,
        default=None,
        help="irreducible modulus coefficients, low degree first (e.g. 1,0,1)",
    )
    common.add_argument("--d", type=int, default=2, help="rank of the quadric (>= 2)")
    common.add_argument("--format", choices=("text", "structured"), default="text")
    common.add_argument("--cap", type=int, default=2**16, help="listing/enumeration cap")
    common.add_argument("--jobs", type=int, default=1, help="worker threads for verification")

    parser = _Parser(prog="hemisystems", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sub.add_parser("stats", parents=[common], help="print the model and group sizes")
    sub.add_parser("orbits", parents=[common], help="print the orbit pairing table")

    p_con = sub.add_parser("construct", parents=[common], help="write a verified certificate")
    p_con.add_argument("--mask", type=str, default="0", help="orbit-choice mask in hex")
    p_con.add_argument("--out", type=str, default="-", help="output path ('-' = stdout)")

    p_ver = sub.add_parser("verify", parents=[common], help="verify a certificate file")
    p_ver.add_argument("path", nargs="?", default="-", help="certificate path ('-' = stdin)")

    sub.add_parser("selftest", parents=[common], help="run the named checks in order")
    return parser


_COMMANDS = {
    "stats": cmd_stats,
    "orbits": cmd_orbits,
    "construct": cmd_construct,
    "verify": cmd_verify,
    "selftest": cmd_selftest,
}


def main(argv=None) -> int:
    try:
        ns = build_parser().parse_args(argv)
        cfg = RunConfig(
            p=ns.p,
            k=ns.k,
            modulus=_parse_modulus(ns.modulus) if ns.modulus else None,
            d=ns.d,
            mask=getattr(ns, "mask", "0"),
            out=getattr(ns, "out", "-"),
            format=ns.format,
            cap=ns.cap,
            jobs=ns.jobs,
            path=getattr(ns, "path", None),
        )
        if cfg.d < 2:
            raise ParseError(f"rank d={cfg.d} must be >= 2")
        if cfg.jobs < 1:
            raise ParseError("jobs must be >= 1")
        return _COMMANDS[ns.command](cfg)
    except VerificationFailed as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ParseError, ModelMismatch, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
