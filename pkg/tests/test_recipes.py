"""Every shipped recipe runs at reduced resolution with the expected labels."""

import dataclasses
from pathlib import Path

import pytest

from spherical_dpw.config import load_config
from spherical_dpw.run import run_job

RECIPES = Path(__file__).resolve().parents[1] / "recipes"

EDGE, BEAKS, DEG = "CuspidalEdge", "CuspidalBeaks", "DegenerateUnclassified"
EXPECTED = {
    "branched_z": {"BranchPoint"},
    "branched_z2": {"BranchPoint"},
    "branched_z6": {"BranchPoint"},
    "cmc_inflection": set(),
    "cmc_nonorientable_data": set(),
    "cone_peaked_sphere": {"ConePoint"},
    "cone_wavy": {"ConePoint"},
    "general_butterfly": {"CuspidalButterfly", EDGE},
    "general_degenerate": {DEG, EDGE},
    "general_swallowtail": {"Swallowtail", EDGE},
    "geodesic_1_0": set(),
    "geodesic_1_1": set(),
    "geodesic_2_0": set(),
    "geodesic_half_0": set(),
    "inflection_s2_1": {DEG},
    "inflection_s_0": {DEG},
    "inflection_s_1": {DEG},
    "nonorientable": {DEG},
    "singular_1_0": {EDGE},
    "singular_1_1": {EDGE},
    "singular_s_0": {DEG, EDGE},
    "singular_s_1": {BEAKS, EDGE},
    "symmetric_1_z3": set(),
    "symmetric_1pz2_1": set(),
    "symmetric_1pz3_z": set(),
    "symmetric_1pz4_z2": set(),
    "symmetric_1pz5_z3": set(),
    "symmetric_1pz5_z3pz8": {"BranchPoint"},
    "symmetric_z4_z2": {"BranchPoint"},
    "trig_cos3_d2sin3": set(),
    "trig_cos_d2sin": set(),
    "trig_cos_sin": set(),
}
# oracles whose tolerance does not depend on the grid spacing
ROBUST = {"iwasawa", "boundary", "curve"}


def test_every_recipe_is_listed():
    assert {p.stem for p in RECIPES.glob("*.ini")} == set(EXPECTED)


@pytest.mark.slow
@pytest.mark.parametrize("name", sorted(EXPECTED))
def test_recipe(name, tmp_path):
    job = load_config(RECIPES / f"{name}.ini")
    assert job.mesh is not None and job.report is not None
    wide = job.grid.x_range[1] - job.grid.x_range[0] > 7
    grid = dataclasses.replace(job.grid, nx=61 if wide else 31, ny=31)
    job = dataclasses.replace(job, grid=grid, mesh=tmp_path / "m.obj", report=tmp_path / "r.json")
    rep = run_job(job)
    for o in rep.oracles:
        if o.name in ROBUST:
            assert o.passed is not False, (o.name, o.value, o.tolerance)
    assert {c.label.value for c in rep.singularities} == EXPECTED[name]
    assert rep.extra["mesh"]["vertices"] == grid.nx * grid.ny
    assert (tmp_path / "r.json").exists()
