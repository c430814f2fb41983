"""Command-line surface: exit codes, certificate round trips, rejections."""

import io
import json
import subprocess
import sys

import numpy as np
import pytest

from hemisystems.cli import (
    CERT_MAGIC,
    main,
    parse_certificate,
    resolve_members,
)
from hemisystems.hemi import assemble, prepare
from conftest import model, qmodel  # noqa: F401 - shared cached fixtures


def run(capsys, *argv):
    rc = main(list(argv))
    captured = capsys.readouterr()
    return rc, captured.out, captured.err


def structured(capsys, *argv):
    rc, out, err = run(capsys, *argv, "--format", "structured")
    return rc, json.loads(out), err


@pytest.fixture(scope="module")
def cert_pair(tmp_path_factory):
    """Two verified certificates at (3,2) with different masks."""
    root = tmp_path_factory.mktemp("certs")
    paths = {}
    for mask in ("0", "7"):
        path = root / f"cert_{mask}.txt"
        rc = main(["construct", "--mask", mask, "--out", str(path)])
        assert rc == 0
        paths[mask] = path
    return paths


# ---------------------------------------------------------------------------
# stats / orbits


def test_stats_text_frozen_values(capsys):
    rc, out, _ = run(capsys, "stats")
    assert rc == 0
    for line in (
        "points 40",
        "maximals 40",
        "s+1 4",
        "t+1 4",
        "(t+1)/2 2",
        "|B| 12",
        "|A| 24",
        "m 3",
        "n_b 6",
    ):
        assert line in out


def test_stats_structured_frozen_values(capsys):
    rc, doc, _ = structured(capsys, "stats", "--p", "5")
    assert rc == 0
    assert doc["points"] == 156
    assert doc["maximals"] == 156
    assert doc["s_plus_1"] == 6
    assert doc["t_plus_1"] == 6
    assert doc["target_degree"] == 3
    assert doc["b_order"] == 60
    assert doc["a_order"] == 120
    assert doc["n_b"] == 2 * doc["m"]


def test_stats_rejects_even_characteristic(capsys):
    rc, _, err = run(capsys, "stats", "--p", "2")
    assert rc == 2
    assert "odd" in err


def test_stats_rejects_rank_one(capsys):
    rc, _, err = run(capsys, "stats", "--d", "1")
    assert rc == 2


def test_orbits_pairing_table(capsys):
    rc, doc, _ = structured(capsys, "orbits")
    assert rc == 0
    assert doc["m"] == 3
    assert doc["n_b"] == 6
    assert doc["point_orbits"] == 5
    assert doc["family_size"] == "8"
    assert sorted(r["size"] for r in doc["pairs"]) == [4, 4, 12]
    seen = [oid for r in doc["pairs"] for oid in (r["low"], r["high"])]
    assert sorted(seen) == list(range(6))


def test_unknown_command_is_usage_error(capsys):
    assert run(capsys, "bogus")[0] == 2
    assert run(capsys)[0] == 2


# ---------------------------------------------------------------------------
# construct


def test_construct_writes_verified_certificate(cert_pair):
    text = cert_pair["0"].read_text()
    assert text.startswith(CERT_MAGIC + " 1\n")
    assert sum(1 for ln in text.splitlines() if ln.startswith("maximal ")) == 20
    assert text.rstrip().endswith("end")


def test_construct_stdout_emits_only_the_certificate(capsys):
    rc, out, _ = run(capsys, "construct", "--mask", "3")
    assert rc == 0
    cert = parse_certificate(out)
    assert len(cert.members) == 20
    assert cert.mask == 3


def test_construct_round_trip_is_identity_on_members(capsys, cert_pair):
    prep = prepare(model(3, 1, 2).field, 2)
    for mask_hex, path in cert_pair.items():
        cert = parse_certificate(path.read_text())
        ids, reason = resolve_members(cert, prep.qm)
        assert reason is None
        expected = assemble(prep.report.split, int(mask_hex, 16))
        assert np.array_equal(np.sort(ids), expected)


def test_construct_bad_mask_is_usage_error(capsys):
    rc, _, err = run(capsys, "construct", "--mask", "ff")
    assert rc == 2
    assert "3 bits" in err
    assert run(capsys, "construct", "--mask", "zz")[0] == 2


# ---------------------------------------------------------------------------
# verify


def test_verify_accepts_fresh_certificate(capsys, cert_pair):
    rc, out, _ = run(capsys, "verify", str(cert_pair["0"]))
    assert rc == 0
    assert "verified" in out


def test_verify_slow_path_via_jobs(capsys, cert_pair):
    rc, doc, _ = structured(capsys, "verify", str(cert_pair["7"]), "--jobs", "3")
    assert rc == 0
    assert doc["method"] == "reduction"
    assert doc["histogram"] == [[2, 40]]


def test_verify_reads_stdin(capsys, monkeypatch, cert_pair):
    monkeypatch.setattr(sys, "stdin", io.StringIO(cert_pair["0"].read_text()))
    rc, out, _ = run(capsys, "verify")
    assert rc == 0
    assert "verified" in out


def test_verify_rejects_tampered_member_with_histogram(capsys, tmp_path, cert_pair):
    base = cert_pair["0"].read_text()
    other = cert_pair["7"].read_text()
    mine = [ln for ln in base.splitlines() if ln.startswith("maximal ")]
    alien = next(
        ln
        for ln in other.splitlines()
        if ln.startswith("maximal ") and ln not in mine
    )
    tampered = tmp_path / "tampered.txt"
    tampered.write_text(base.replace(mine[0], alien))
    rc, doc, _ = structured(capsys, "verify", str(tampered))
    assert rc == 1
    assert doc["ok"] is False
    degrees = dict((a, b) for a, b in doc["histogram"])
    assert set(degrees) != {2}


def test_verify_rejects_edited_gram_header(capsys, tmp_path, cert_pair):
    text = cert_pair["0"].read_text()
    bad = tmp_path / "badgram.txt"
    bad.write_text(text.replace("gram 1;", "gram 2;", 1))
    rc, _, err = run(capsys, "verify", str(bad))
    assert rc == 2
    assert "Gram" in err


def test_verify_rejects_garbage_and_truncation(capsys, tmp_path, cert_pair):
    junk = tmp_path / "junk.txt"
    junk.write_text("not a certificate\n")
    assert run(capsys, "verify", str(junk))[0] == 2

    trunc = tmp_path / "trunc.txt"
    trunc.write_text(cert_pair["0"].read_text().rsplit("end", 1)[0])
    assert run(capsys, "verify", str(trunc))[0] == 2

    empty = tmp_path / "empty.txt"
    empty.write_text("")
    assert run(capsys, "verify", str(empty))[0] == 2

    assert run(capsys, "verify", str(tmp_path / "missing.txt"))[0] == 2


def test_verify_rejects_duplicate_member(capsys, tmp_path, cert_pair):
    text = cert_pair["0"].read_text()
    lines = [ln for ln in text.splitlines() if ln.startswith("maximal ")]
    dup = tmp_path / "dup.txt"
    dup.write_text(text.replace(lines[1], lines[0], 1))
    rc, out, _ = run(capsys, "verify", str(dup))
    assert rc == 1
    assert "duplicate" in out


def test_verify_rejects_non_maximal_member(capsys, tmp_path, cert_pair):
    text = cert_pair["0"].read_text()
    lines = [ln for ln in text.splitlines() if ln.startswith("maximal ")]
    rows = lines[0].split(" ", 1)[1].split("|")
    degenerate = "maximal " + "|".join([rows[0], rows[0]])
    bad = tmp_path / "notmax.txt"
    bad.write_text(text.replace(lines[0], degenerate, 1))
    rc, out, _ = run(capsys, "verify", str(bad))
    assert rc == 1
    assert "not a maximal" in out


def test_verify_rejects_wrong_member_count(capsys, tmp_path, cert_pair):
    text = cert_pair["0"].read_text()
    lines = [ln for ln in text.splitlines() if ln.startswith("maximal ")]
    short = tmp_path / "short.txt"
    short.write_text(text.replace(lines[0] + "\n", "", 1))
    rc, doc, _ = structured(capsys, "verify", str(short))
    assert rc == 1
    assert doc["ok"] is False
    assert doc["size"] == 19


# ---------------------------------------------------------------------------
# selftest


def test_selftest_baseline_all_pass(capsys):
    rc, doc, _ = structured(capsys, "selftest")
    assert rc == 0
    assert doc["ok"] is True
    assert [c["name"] for c in doc["checks"]] == [
        "field-axioms",
        "polarization",
        "witt-indices",
        "counts",
        "w-singular-orbits",
        "group-orders",
        "tau-properties",
        "ab-conditions",
        "hemisystem-roundtrip",
    ]
    assert all(c["ok"] for c in doc["checks"])


def test_selftest_extension_field(capsys):
    rc, doc, _ = structured(capsys, "selftest", "--p", "3", "--k", "2")
    assert rc == 0
    assert doc["q"] == 9
    assert all(c["ok"] for c in doc["checks"])


def test_selftest_text_reports_one_line_per_check(capsys):
    rc, out, _ = run(capsys, "selftest", "--p", "5")
    assert rc == 0
    assert sum(1 for ln in out.splitlines() if ln.startswith("pass ")) == 9
    assert "selftest passed" in out


# ---------------------------------------------------------------------------
# subprocess smoke: real exit codes through the console entry point


def test_subprocess_construct_then_verify(tmp_path):
    out = tmp_path / "cert.txt"
    build = subprocess.run(
        [sys.executable, "-m", "hemisystems.cli", "construct", "--out", str(out)],
        capture_output=True,
        text=True,
    )
    assert build.returncode == 0, build.stderr
    check = subprocess.run(
        [sys.executable, "-m", "hemisystems.cli", "verify", str(out)],
        capture_output=True,
        text=True,
    )
    assert check.returncode == 0, check.stderr
    assert "verified" in check.stdout
    bad = subprocess.run(
        [sys.executable, "-m", "hemisystems.cli", "stats", "--p", "2"],
        capture_output=True,
        text=True,
    )
    assert bad.returncode == 2
