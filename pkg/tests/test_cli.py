import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from sbd_approx import cli
from sbd_approx.sbd_field import PolyField


def run(argv, capsys):
    code = cli.main(argv)
    cap = capsys.readouterr()
    return code, cap.out, cap.err


@pytest.mark.parametrize("name", cli.CORPUS_IDS)
def test_gen_deterministic(name, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert cli.main(["gen", "--field", name, "--out", str(a), "--seed", "1"]) == 0
    assert cli.main(["gen", "--field", name, "--out", str(b), "--seed", "1"]) == 0
    assert a.read_bytes() == b.read_bytes()
    PolyField.from_spec(json.loads(a.read_text()))


def test_gen_corpus_contents():
    spec = cli.corpus_spec("piecewise-rigid-flat")
    seg = spec["jump_segments"]
    assert len(seg) == 1 and seg[0]["p0"][1] == 0.5 and seg[0]["p1"][1] == 0.5
    f = cli.corpus_field("piecewise-rigid-flat")
    X = np.array([[0.3, 0.5]])
    assert np.allclose(f.jump(X, np.array([[0.0, 1.0]])), [[1.0, 0.0]])
    assert cli.corpus_spec("smooth-poly")["jump_segments"] == []


def test_gen_unknown_id():
    with pytest.raises(cli.Rejected):
        cli.cmd_gen("nope")


def test_approx_fixed_point_csv(capsys):
    code, out, _ = run(["approx", "--field", "piecewise-rigid-flat", "--k", "16,32"], capsys)
    assert code == cli.EXIT_OK
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [int(r["k"]) for r in rows] == [16, 32]
    for r in rows:
        for name in ("bd_error", "strain_lp_error", "jump_symmdiff", "jump_amp_error", "excluded_area",
                     "excluded_lp_error"):
            assert float(r[name]) <= 1e-6


def test_approx_csv_deterministic_and_17_digits(tmp_path, monkeypatch):
    monkeypatch.setenv("SBD_APPROX_QUIET", "1")
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    argv = ["approx", "--field", "smooth-poly", "--k", "16", "--thm", "12"]
    assert cli.main(argv + ["--out", str(a)]) == 0
    assert cli.main(argv + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    row = list(csv.DictReader(io.StringIO(a.read_text())))[0]
    assert float(row["jump_creation"]) == 0.0
    mant = row["bd_error"].lower().split("e")[0].replace(".", "").replace("-", "").lstrip("0")
    assert len(mant) <= 17 and float(row["bd_error"]) > 0


def test_approx_from_json_path(tmp_path, capsys):
    p = tmp_path / "f.json"
    cli.main(["gen", "--field", "piecewise-rigid-flat", "--out", str(p)])
    code, out, _ = run(["approx", "--field", str(p), "--k", "16"], capsys)
    assert code == 0 and float(list(csv.DictReader(io.StringIO(out)))[0]["bd_error"]) <= 1e-6


@pytest.mark.parametrize("argv,needle", [
    (["approx", "--field", "smooth-poly", "--k", "32,16"], "strictly increasing"),
    (["approx", "--field", "smooth-poly", "--k", "16", "--theta", "1.5"], "theta"),
    (["approx", "--field", "smooth-poly", "--k", "16", "--p", "1"], "p must exceed 1"),
    (["approx", "--field", "missing.json", "--k", "16"], "unknown field"),
    (["approx", "--field", "smooth-poly", "--k", "2"], "need k"),
    (["gamma", "--p", "0.5", "--constants-only"], "p must exceed 1"),
    (["verify", "--threads", "0"], "threads"),
])
def test_reject_exit_code(argv, needle, capsys):
    code, _, err = run(argv, capsys)
    assert code == cli.EXIT_REJECT
    assert needle in err


def test_assertion_exit_code(tmp_path, capsys):
    # a reversed eps sweep makes the relative error grow, which the command asserts against
    cfg = tmp_path / "g.json"
    cfg.write_text(json.dumps({"eps_list": [2 ** -5, 2 ** -3]}))
    code, _, err = run(["gamma", "--config", str(cfg)], capsys)
    assert code == cli.EXIT_ASSERT and "not decreasing" in err


def test_constants_only(capsys):
    code, out, _ = run(["gamma", "--constants-only"], capsys)
    assert code == 0
    a, b = (float(x) for x in out.strip().split("\n")[1].split(","))
    assert b == 2.0 and abs(a - 8 / 3) <= 1e-9


def test_gamma_zero_target(capsys):
    code, out, _ = run(["gamma", "--target", "zero", "--eps", "0.125,0.0625"], capsys)
    assert code == 0
    assert all(float(r["energy"]) == 0.0 for r in csv.DictReader(io.StringIO(out)))


def test_gamma_jump_benchmark(capsys, monkeypatch):
    monkeypatch.setenv("SBD_APPROX_QUIET", "1")
    code, out, err = run(["gamma", "--target", "jump"], capsys)
    assert code == 0 and err == ""
    rows = list(csv.DictReader(io.StringIO(out)))
    assert float(rows[-1]["rel_error"]) <= 0.05


def test_progress_on_stderr_unless_quiet(capsys, monkeypatch):
    monkeypatch.delenv("SBD_APPROX_QUIET", raising=False)
    run(["approx", "--field", "smooth-poly", "--k", "16"], capsys)
    code, _, err = run(["approx", "--field", "smooth-poly", "--k", "16"], capsys)
    assert code == 0 and "k=16" in err
    monkeypatch.setenv("SBD_APPROX_QUIET", "1")
    _, _, err = run(["approx", "--field", "smooth-poly", "--k", "16"], capsys)
    assert err == ""


def test_help_documents_columns():
    text = cli._parser().format_help()
    for col in ("bd_error", "jump_symmdiff", "rel_error"):
        assert col in text


def test_verify(capsys):
    code, out, _ = run(["verify"], capsys)
    assert code == 0 and "FAIL" not in out


def test_console_entry_point():
    r = subprocess.run([sys.executable, "-m", "sbd_approx.cli", "gamma", "--constants-only"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.startswith("a,b")
