"""End-to-end jobs: frame, frontal, oracles, classification, report."""

from __future__ import annotations

import json
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import singularities as sg
from .config import JobSpec
from .errors import InputError
from .frame import FrameField, integrate_frame, path_independence_check
from .mesh import export_mesh
from .singularities import Classification, SingularityLabel
from .surface import Frontal, build_frontal, curvature_field, d_dx, d_dy, frenet_reconstruct, procrustes

REPORT_VERSION = "1.0"
GCP_KINDS = {"geodesic_gcp", "general_gcp", "singular_gcp", "singular_general", "cone", "cmc_gcp"}
BOUNDARY_TOL = 1e-6


@dataclass
class Oracle:
    name: str
    passed: bool | None
    value: float | None = None
    tolerance: float | None = None
    detail: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        d = {"name": self.name, "status": "skipped" if self.passed is None else ("pass" if self.passed else "fail"),
             "value": self.value, "tolerance": self.tolerance}
        if self.detail:
            d["detail"] = self.detail
        return d


@dataclass
class RunReport:
    job: dict
    oracles: list = field(default_factory=list)
    singularities: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)
    timing: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(o.passed is not False for o in self.oracles)

    @property
    def exit_code(self) -> int:
        return 0 if self.passed else 1

    def as_dict(self) -> dict:
        return {
            "report_version": REPORT_VERSION,
            "status": "pass" if self.passed else "fail",
            "job": self.job,
            "oracles": [o.as_dict() for o in self.oracles],
            "singularities": [c.as_dict() for c in self.singularities],
            **self.extra,
            "timing": self.timing,
        }

    def to_json(self) -> str:
        return json.dumps(_plain(self.as_dict()), indent=2, sort_keys=True, allow_nan=False) + "\n"

    def write(self, path) -> None:
        try:
            Path(path).parent.mkdir(parents=True, exist_ok=True)
            Path(path).write_text(self.to_json())
        except OSError as exc:
            raise InputError(f"cannot write report to {path}: {exc}") from exc


def _plain(x):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        v = float(x)
        return v if np.isfinite(v) else str(v)
    if isinstance(x, complex):
        return [x.real, x.imag]
    return x


# --------------------------------------------------------------- oracles

def _row_of_zero(spec) -> int | None:
    y = spec.y
    j = int(np.argmin(np.abs(y)))
    return j if abs(y[j]) < 1e-12 and 0 < j < len(y) - 1 else None


def well_regular(fr: Frontal, reg_floor: float, reg_fraction: float) -> np.ndarray:
    m = fr.margin
    finite = np.isfinite(m)
    if not np.any(finite):
        return np.zeros(m.shape, dtype=bool)
    floor = max(reg_floor, reg_fraction * float(np.nanmedian(m)))
    return finite & (m > floor)


def oracle_iwasawa(ff: FrameField, job: JobSpec) -> Oracle:
    tol = job.numerics["iwasawa_tol"]
    r = float(np.max(ff.residual))
    flagged = int(np.count_nonzero(~ff.ok))
    return Oracle("iwasawa", r <= tol and flagged == 0, r, tol,
                  {"flagged_points": flagged, "mean_residual": float(np.mean(ff.residual)),
                   "max_det_defect": ff.diagnostics["max_det_defect"]})


def oracle_frontal(fr: Frontal, sph: Frontal, job: JobSpec) -> Oracle:
    """Frontal and defining-equation defects, relative to the surface speed when that exceeds 1."""
    tol = job.numerics["frontal_tol"]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        speed = float(np.nanmax(np.linalg.norm(d_dx(sph.f, job.grid.hx), axis=-1)))
        speed = max(speed, float(np.nanmax(np.linalg.norm(d_dy(sph.f, job.grid.hy), axis=-1))))
        unit = float(np.nanmax(np.abs(np.linalg.norm(fr.N, axis=-1) - 1)))
    v = fr.diagnostics["frontal_defect"]
    d = {"frontal_defect": v, "unit_normal_defect": unit, "speed_scale": speed}
    if "defining_residual" in sph.diagnostics:
        d["defining_residual"] = sph.diagnostics["defining_residual"]
        v = max(v, d["defining_residual"])
    v = v / max(1.0, speed)
    return Oracle("frontal", bool(v <= tol and unit <= 1e-10), v, tol, d)


def oracle_curvature(fr: Frontal, job: JobSpec) -> Oracle:
    tol = job.numerics["curvature_tol"]
    good = well_regular(fr, job.numerics["reg_floor"], job.numerics["reg_fraction"])
    K, H = curvature_field(fr)
    if fr.kind == "cmc":
        err, target = np.abs(H - 0.5), "H = 1/2"
    else:
        err, target = np.abs(K - 1.0), "K = 1"
    err = err[good & np.isfinite(err)]
    if err.size == 0:
        return Oracle("curvature", None, detail={"reason": "no regular interior points"})
    v = float(err.max())
    return Oracle("curvature", v <= tol, v, tol, {"target": target, "points": int(err.size),
                                                  "median_error": float(np.median(err))})


def oracle_flatness(job: JobSpec, substeps: int) -> Oracle:
    tol = job.numerics["flatness_tol"]
    v = path_independence_check(job.potential, job.grid, job.numerics["probes"], job.numerics["n_trunc"],
                                step=min(job.grid.hx, job.grid.hy) / substeps)
    return Oracle("flatness", v <= tol, v, tol)


def oracle_boundary(ff: FrameField, job: JobSpec) -> Oracle:
    j = _row_of_zero(job.grid)
    if job.kind not in GCP_KINDS or j is None:
        return Oracle("boundary", None, detail={"reason": "no Cauchy curve on the grid"})
    B = ff.plus.coeffs[:, j]
    eye = np.zeros_like(B[0])
    eye[0] = np.eye(2)
    v = float(np.max(np.abs(B - eye)))
    return Oracle("boundary", v <= BOUNDARY_TOL, v, BOUNDARY_TOL)


def _speed4(f_row: np.ndarray, h: float) -> np.ndarray:
    """Fourth-order central differences of a sampled curve (interior points only)."""
    d = (-f_row[4:] + 8 * f_row[3:-1] - 8 * f_row[1:-3] + f_row[:-4]) / (12 * h)
    return np.linalg.norm(d, axis=-1)


def oracle_curve(fr: Frontal, job: JobSpec) -> Oracle:
    j = _row_of_zero(job.grid)
    if job.kind not in ("geodesic_gcp", "singular_gcp") or j is None:
        return Oracle("curve", None, detail={"reason": "only for curvature/torsion data with y = 0 on the grid"})
    tol = job.numerics["curve_tol"]
    x = job.grid.x
    c = frenet_reconstruct(job.potential.data["kappa"], job.potential.data["tau"], (x[0], x[-1]), len(x))
    row = fr.f[:, j]
    if fr.kind == "cmc":
        row = row + fr.N[:, j]
    res, _, _ = procrustes(c.points, row)
    speed = float(np.max(np.abs(_speed4(row, job.grid.hx) - 1)))
    # the pointwise match against a unit-speed curve already fixes the
    # parametrisation; the finite-difference speed is informational
    return Oracle("curve", res <= tol, res, tol, {"speed_defect_fd4": speed})


def oracle_locus(fr: Frontal, ff: FrameField, job: JobSpec) -> Oracle:
    j = _row_of_zero(job.grid)
    if job.kind not in ("singular_gcp", "singular_general", "cone") or j is None:
        return Oracle("locus", None, detail={"reason": "only for singular Cauchy data with y = 0 on the grid"})
    x = job.grid.x
    h = max(job.grid.hx, job.grid.hy)
    inner = slice(2, len(x) - 2)
    if job.kind == "cone" or (job.kind == "singular_general" and sg.vanishes_identically(
            job.potential.data["b"], 0.5 * (x[0] + x[-1]), (x[0], x[-1]))):
        diam = sg.image_diameter(fr.f[:, j])
        return Oracle("locus", diam <= 1e-6, diam, 1e-6, {"check": "image diameter of the singular curve"})
    mu = fr.mu4
    mu_row = float(np.nanmax(np.abs(mu[inner, j])))
    scale = float(np.nanmax(np.abs(mu)))
    d = {"max_abs_mu_on_curve": mu_row, "mu_scale": scale}
    ok = mu_row <= 1e-5 * max(1.0, scale)
    # null direction at sample points where the data are non-degenerate
    xs = np.arange(2, len(x) - 2, max(1, (len(x) - 4) // 10))
    worst = 0.0
    for i in xs:
        if job.kind == "singular_gcp":
            t = float(np.real(job.potential.data["tau"](complex(x[i]))))
            k = float(np.real(job.potential.data["kappa"](complex(x[i]))))
            if abs(k) < 1e-3:
                continue
            w = (t, 1.0)
        else:
            b = float(np.real(job.potential.data["b"](complex(x[i]))))
            c = float(np.real(job.potential.data["c"](complex(x[i]))))
            if abs(c) < 1e-3:
                continue
            w = (1.0, b)
        worst = max(worst, sg.direction_alignment(sg.null_direction(fr, i, j), w))
    d["null_direction_sin"] = worst
    ok &= worst <= 10 * h
    if job.kind == "singular_gcp" and fr.kind == "spherical":
        dmu = d_dy(mu, job.grid.hy, order=4)[inner, j]
        k = np.real(job.potential.data["kappa"](x[inner].astype(complex)))
        t = np.real(job.potential.data["tau"](x[inner].astype(complex)))
        e = float(np.nanmax(np.abs(dmu + k * (1 + t * t))))
        d["dmu_dy_defect"] = e
        ok &= e <= 1e-3 * max(1.0, float(np.max(np.abs(k * (1 + t * t)))))
    return Oracle("locus", bool(ok), mu_row, 1e-5 * max(1.0, scale), d)


# ------------------------------------------------------- classification

def classify(job: JobSpec) -> tuple[list[Classification], dict]:
    """Analytic classification from the job's data (no mesh needed)."""
    data, interval = job.potential.data, job.interval
    extra: dict = {}
    if job.kind == "singular_gcp":
        return sg.survey_singular_curve(data["kappa"], data["tau"], interval), extra
    if job.kind in ("singular_general", "cone"):
        out = sg.survey_general_curve(data["b"], data["c"], interval)
        if "cone" in job.data:
            rep = job.data["cone"]
            extra["cone"] = {"one_signed": rep.one_signed, "c_min": rep.c_min, "c_max": rep.c_max,
                             "closes": rep.closes, "closing_defect": rep.closing_defect, "period": rep.period,
                             "embedded_precondition": rep.embedded_precondition}
        return out, extra
    if job.kind == "normalized":
        g = job.grid
        rep = sg.branch_points(data["a"], data["b"], (g.x_range, g.y_range), g.z0)
        out = [Classification(SingularityLabel.BRANCH_POINT, p, "a(z) = b(z) = 0") for p in rep.points]
        extra["branch_points"] = {
            "points": [[p.real, p.imag] for p in rep.points],
            "unpolished": [[p.real, p.imag] for p in rep.unpolished],
            "basepoint": [rep.basepoint.real, rep.basepoint.imag],
            "basepoint_rank1_singular": rep.basepoint_rank1,
            "rank1_locus_samples": int(len(rep.rank1_samples)),
            "rank1_locus_heuristic": True,
        }
        return out, extra
    if job.kind in ("geodesic_gcp", "general_gcp"):
        f = data["kappa"] if job.kind == "geodesic_gcp" else data["kappa_n"]
        name = "kappa" if job.kind == "geodesic_gcp" else "kappa_n"
        out = [Classification(SingularityLabel.DEGENERATE, x, f"{name}(x0) = 0: the solution is singular here "
                              "(no classification criterion for this data)", {name: 0.0})
               for x in sg.real_zeros(f, interval)]
        return out, extra
    return [], extra


# ------------------------------------------------------------------ run

MAX_SUBSTEPS = 16


def solve_frame(job: JobSpec) -> FrameField:
    """Integrate and factor, refining the RK4 substeps while the det drift is too large."""
    return integrate_frame(job.potential, job.grid, job.numerics["n_trunc"], job.tolerances,
                           job.numerics["substeps"], job.numerics["workers"], max_substeps=MAX_SUBSTEPS)


def run_job(job: JobSpec, write_mesh: bool = True, oracles=None) -> RunReport:
    """Integrate, build the frontal, run oracles and classification, write artifacts."""
    t_all = time.perf_counter()
    report = RunReport(job.echo())
    selected = job.oracles if oracles is None else tuple(oracles)

    t = time.perf_counter()
    ff = solve_frame(job)
    report.timing["frame"] = time.perf_counter() - t
    report.extra["frame"] = dict(ff.diagnostics, split="B_minus" if ff.reflected else "B_plus")

    t = time.perf_counter()
    sph = build_frontal(ff, "spherical")
    fr = sph if job.frontal == "spherical" else build_frontal(ff, "cmc")
    report.timing["frontal"] = time.perf_counter() - t

    t = time.perf_counter()
    runners = {
        "iwasawa": lambda: oracle_iwasawa(ff, job),
        "frontal": lambda: oracle_frontal(fr, sph, job),
        "curvature": lambda: oracle_curvature(fr, job),
        "flatness": lambda: oracle_flatness(job, ff.diagnostics["substeps"]),
        "boundary": lambda: oracle_boundary(ff, job),
        "curve": lambda: oracle_curve(fr, job),
        "locus": lambda: oracle_locus(sph, ff, job),
    }
    report.oracles = [runners[name]() for name in selected]
    report.timing["oracles"] = time.perf_counter() - t

    t = time.perf_counter()
    report.singularities, extra = classify(job)
    report.extra.update(extra)
    loci = sg.trace_singular_locus(fr)
    report.extra["singular_locus"] = {"polylines": len(loci),
                                      "points": [np.round(l, 12).tolist() for l in loci]}
    if job.data.get("warnings"):
        report.extra["admissibility_warnings"] = job.data["warnings"]
    report.timing["classification"] = time.perf_counter() - t

    if write_mesh and job.mesh is not None:
        t = time.perf_counter()
        report.extra["mesh"] = export_mesh(fr, job.mesh, job.color_field)
        report.timing["mesh"] = time.perf_counter() - t
    report.timing["total"] = time.perf_counter() - t_all
    if job.report is not None:
        report.write(job.report)
    return report
