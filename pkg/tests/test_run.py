import json

import pytest

from spherical_dpw.config import load_config, loads_config
from spherical_dpw.run import run_job


def job(body, n=41, extra=""):
    return loads_config(f"[potential]\n{body}\n[grid]\nnx = {n}\nny = {n}\n{extra}")


def oracle(report, name):
    return next(o for o in report.oracles if o.name == name)


def test_geodesic_circle_all_oracles():
    rep = run_job(job('kind = geodesic_gcp\nkappa = "2"\ntau = "0"', 81), write_mesh=False)
    status = {o.name: o.passed for o in rep.oracles}
    assert status == {"iwasawa": True, "frontal": True, "curvature": True, "flatness": True,
                      "boundary": True, "curve": True, "locus": None}
    assert rep.exit_code == 0 and rep.singularities == []
    assert rep.extra["frame"]["split"] == "B_minus"


def test_singular_data_report_beaks():
    rep = run_job(job('kind = singular_gcp\nkappa = "s"\ntau = "1"', 61,
                      "[output]\noracles = iwasawa, curve, locus\n"), write_mesh=False)
    assert rep.passed
    labels = {(c.label.value, round(c.location, 12)) for c in rep.singularities}
    assert ("CuspidalBeaks", 0.0) in labels
    assert rep.extra["singular_locus"]["polylines"] >= 1
    assert oracle(rep, "locus").detail["dmu_dy_defect"] < 1e-3


def test_singular_curvature_converges_at_second_order():
    errs = [oracle(run_job(job('kind = singular_gcp\nkappa = "s"\ntau = "1"', n,
                               "[output]\noracles = curvature\n"), write_mesh=False), "curvature").value
            for n in (41, 81)]
    assert 3.5 < errs[0] / errs[1] < 4.5


def test_cmc_mean_curvature():
    rep = run_job(job('kind = cmc_gcp\nkappa_n = "s"\nkappa_g = "0"\nmu = "0"', 61,
                      "[output]\noracles = iwasawa, frontal, curvature, boundary\n"), write_mesh=False)
    assert rep.passed
    assert oracle(rep, "curvature").detail["target"].startswith("H")


def test_skipped_oracles_do_not_fail():
    rep = run_job(job('kind = normalized\na = "1"\nb = "z^2"', 21,
                      "[output]\noracles = curve, locus, boundary\n"), write_mesh=False)
    assert [o.passed for o in rep.oracles] == [None, None, None]
    assert rep.passed and rep.as_dict()["status"] == "pass"
    assert rep.extra["frame"]["split"] == "B_plus"
    assert "branch_points" in rep.extra


def test_deterministic_artifacts(tmp_path):
    text = ('[potential]\nkind = singular_general\nb = "s"\nc = "1"\n[grid]\nnx = 31\nny = 31\n'
            '[output]\nmesh = "m.obj"\nreport = "r.json"\noracles = iwasawa, locus\n')
    blobs = []
    for k in range(2):
        d = tmp_path / str(k)
        d.mkdir()
        (d / "job.ini").write_text(text)
        run_job(load_config(d / "job.ini"))
        rep = json.loads((d / "r.json").read_text())
        rep.pop("timing")
        rep["job"]["output"] = None
        rep["mesh"].pop("path")
        blobs.append(((d / "m.obj").read_bytes(), (d / "m.csv").read_bytes(), json.dumps(rep, sort_keys=True)))
    assert blobs[0] == blobs[1]


def test_report_json_is_strict(tmp_path):
    rep = run_job(job('kind = singular_gcp\nkappa = "1"\ntau = "0"', 21), write_mesh=False)
    text = rep.to_json()
    json.loads(text, parse_constant=lambda c: pytest.fail(f"non-standard constant {c}"))
    d = json.loads(text)
    assert d["report_version"] == "1.0"
    assert set(d) >= {"status", "job", "oracles", "singularities", "frame", "singular_locus", "timing"}
