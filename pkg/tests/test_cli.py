import json

import numpy as np
import pytest

from spherical_dpw import laurent as lm
from spherical_dpw.cli import format_loop, main, read_loop
from spherical_dpw.errors import InputError

GOOD = """[potential]
kind = geodesic_gcp
kappa = "2"
tau = "0"
[grid]
nx = 21
ny = 21
[output]
oracles = iwasawa, boundary
"""


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_solve_pass_writes_artifacts(tmp_path, capsys):
    p = write(tmp_path, "job.ini", GOOD + 'mesh = "out/m.obj"\nreport = "out/r.json"\n')
    assert main(["solve", str(p)]) == 0
    out = capsys.readouterr().out
    assert "pass    iwasawa" in out and "pass    boundary" in out
    rep = json.loads((tmp_path / "out" / "r.json").read_text())
    assert rep["status"] == "pass" and rep["report_version"] == "1.0"
    assert (tmp_path / "out" / "m.obj").exists() and (tmp_path / "out" / "m.csv").exists()


def test_solve_without_report_prints_json(tmp_path, capsys):
    p = write(tmp_path, "job.ini", GOOD)
    assert main(["verify", str(p)]) == 0
    out = capsys.readouterr().out
    report = json.loads(out[out.index("{"):])
    assert [o["name"] for o in report["oracles"]] == ["iwasawa", "boundary"]
    assert "mesh" not in report


def test_oracle_failure_exit_1(tmp_path, capsys):
    p = write(tmp_path, "job.ini", GOOD.replace("[output]", "[numerics]\niwasawa_tol = 1e-30\n[output]"))
    assert main(["verify", str(p)]) == 1
    assert "fail    iwasawa" in capsys.readouterr().out


def test_input_error_exit_2(tmp_path, capsys):
    p = write(tmp_path, "job.ini", GOOD.replace('kappa = "2"', 'kapa = "2"'))
    assert main(["solve", str(p)]) == 2
    err = capsys.readouterr().err
    assert "input error" in err and "potential.kapa" in err and "line 3" in err
    assert main(["solve", str(tmp_path / "missing.ini")]) == 2


def test_usage_error_exit_2(capsys):
    with pytest.raises(SystemExit) as info:
        main(["frobnicate"])
    assert info.value.code == 2


def test_numerical_failure_exit_3(tmp_path, capsys):
    p = write(tmp_path, "job.ini", '[potential]\nkind = normalized\na = "1/z"\nb = "1"\n[grid]\nnx = 11\nny = 11\n')
    assert main(["verify", str(p)]) == 3
    assert "numerical failure" in capsys.readouterr().err


def test_classify(tmp_path, capsys):
    p = write(tmp_path, "job.ini", '[potential]\nkind = singular_gcp\nkappa = "s"\ntau = "1"\n')
    assert main(["classify", str(p)]) == 0
    out = json.loads(capsys.readouterr().out)
    labels = {(s["label"], s["location"]) for s in out["singularities"]}
    assert ("CuspidalBeaks", 0.0) in labels


def test_factorize_sphere_loop(tmp_path, capsys):
    from conftest import sphere_closed_form
    z = 0.3 - 0.7j
    p = write(tmp_path, "loop.txt", "# Phi = [[1, z/lam], [0, 1]]\n0 1 0 0 0 0 0 1 0\n-1 0 0 %r %r 0 0 0 0\n"
              % (z.real, z.imag))
    out_dir = tmp_path / "factors"
    assert main(["factorize", str(p), "--out-dir", str(out_dir)]) == 0
    text = capsys.readouterr().out.splitlines()
    rho = float(text[0].split()[1])
    assert rho == pytest.approx(1 / np.sqrt(1 + abs(z) ** 2), abs=1e-14)
    assert float(text[1].split()[1]) < 1e-12
    F, B = read_loop(out_dir / "loop.F.txt"), read_loop(out_dir / "loop.B.txt")
    F0, B0 = sphere_closed_form(z)
    lam = lm.circle_samples(16)
    np.testing.assert_allclose(lm.evaluate(F, lam), lm.evaluate(F0, lam), atol=1e-12)
    np.testing.assert_allclose(lm.evaluate(B, lam), lm.evaluate(B0, lam), atol=1e-12)


def test_factorize_rejects_untwisted(tmp_path, capsys):
    p = write(tmp_path, "bad.txt", "0 1 0 0 0 0 0 1 0\n-1 1 0 0 0 0 0 0 0\n")
    assert main(["factorize", str(p)]) == 2
    assert "not twisted" in capsys.readouterr().err


@pytest.mark.parametrize("text, msg", [
    ("0 1 0 0 0\n", ":1: expected 9 fields"),
    ("# c\n0 1 0 0 0 0 0 x 0\n", ":2:"),
    ("0 1 0 0 0 0 0 1 0\n0 1 0 0 0 0 0 1 0\n", "given twice"),
    ("0 1 0 0 0 0 0 inf 0\n", "non-finite"),
    ("\n# nothing\n", "no coefficient lines"),
])
def test_read_loop_errors(tmp_path, text, msg):
    p = write(tmp_path, "l.txt", text)
    with pytest.raises(InputError, match=msg):
        read_loop(p)


def test_loop_file_round_trip(tmp_path, rng):
    from conftest import random_twisted
    L = random_twisted(rng)
    p = write(tmp_path, "r.txt", format_loop(L))
    back = read_loop(p)
    lam = lm.circle_samples(12)
    np.testing.assert_array_equal(lm.evaluate(back, lam), lm.evaluate(L, lam))
    assert "-0 " not in format_loop(lm.LaurentMatrix.from_terms({0: -0.0 * np.eye(2) + np.eye(2)}))
