"""Surfaces from extended frames: Sym formulas, normals and curvature oracles."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.integrate import solve_ivp

from . import laurent as lm
from .analytic import as_fn
from .errors import DPWError, InputError, ValidationError
from .frame import FrameField, GridSpec, regularity_margin
from .laurent import LaurentMatrix

SU2_TOL = 1e-8
REG_FLOOR = 1e-3


# ---------------------------------------------------------- point maps

def _inv2(m: np.ndarray) -> np.ndarray:
    out = np.empty_like(m)
    d = lm.det2(m)
    out[..., 0, 0] = m[..., 1, 1] / d
    out[..., 1, 1] = m[..., 0, 0] / d
    out[..., 0, 1] = -m[..., 0, 1] / d
    out[..., 1, 0] = -m[..., 1, 0] / d
    return out


def sym_from_values(F1: np.ndarray, dF1: np.ndarray, tol: float = SU2_TOL) -> np.ndarray:
    """i (lam dF/dlam) F^-1 at lam = 1 as vectors in R^3."""
    X = 1j * lm.mm2(dF1, _inv2(F1))
    return lm.su2_to_r3(X, tol=tol)


def normal_from_values(F1: np.ndarray, tol: float = SU2_TOL) -> np.ndarray:
    """Ad_F e3 at lam = 1 as unit vectors."""
    X = lm.mm2(lm.mm2(F1, lm.E3), _inv2(F1))
    return lm.su2_to_r3(X, tol=tol)


def _values(F: LaurentMatrix):
    return lm.evaluate(F, 1.0), lm.evaluate(lm.lambda_derivative(F), 1.0)


def sym_point(F: LaurentMatrix) -> np.ndarray:
    """Sym formula f = i (lam dF/dlam F^-1) at lam = 1."""
    F1, dF1 = _values(F)
    return sym_from_values(F1, dF1)


def normal(F: LaurentMatrix) -> np.ndarray:
    """N = Ad_F e3 at lam = 1."""
    F1, _ = _values(F)
    N = normal_from_values(F1)
    defect = float(np.max(np.abs(np.linalg.norm(N, axis=-1) - 1)))
    if defect > 1e-10:
        raise ValidationError(f"normal is not unit length (defect {defect:.3e})", defect=defect)
    return N


def sym_bobenko_point(F: LaurentMatrix) -> np.ndarray:
    """Parallel CMC point: Sym point minus the normal."""
    return sym_point(F) - normal(F)


# ----------------------------------------------------------- frontal

@dataclass(frozen=True, eq=False)
class Frontal:
    """Positions and normals on a grid, indexed [ix, iy]; masked points hold NaN."""

    spec: GridSpec
    f: np.ndarray
    N: np.ndarray
    mask: np.ndarray
    margin: np.ndarray
    kind: str = "spherical"
    diagnostics: dict = field(default_factory=dict)
    orientation: int = 1

    @property
    def mu(self) -> np.ndarray:
        return degeneracy(self.f, self.N, self.spec.hx, self.spec.hy)

    @property
    def mu4(self) -> np.ndarray:
        """Fourth-order degeneracy field (NaN within two points of the boundary)."""
        return degeneracy(self.f, self.N, self.spec.hx, self.spec.hy, order=4)


def d_dx(a: np.ndarray, h: float, order: int = 2) -> np.ndarray:
    """Central difference along axis 0, NaN on the order/2 boundary rows at each end."""
    out = np.full(a.shape, np.nan)
    if order == 2:
        out[1:-1] = (a[2:] - a[:-2]) / (2 * h)
    elif order == 4:
        out[2:-2] = (-a[4:] + 8 * a[3:-1] - 8 * a[1:-3] + a[:-4]) / (12 * h)
    else:
        raise InputError(f"difference order must be 2 or 4, got {order}")
    return out


def d_dy(a: np.ndarray, h: float, order: int = 2) -> np.ndarray:
    return np.swapaxes(d_dx(np.swapaxes(a, 0, 1), h, order), 0, 1)


def degeneracy(f: np.ndarray, N: np.ndarray, hx: float, hy: float, order: int = 2) -> np.ndarray:
    """<f_x x f_y, N>, NaN on the boundary."""
    return np.einsum("...k,...k->...", np.cross(d_dx(f, hx, order), d_dy(f, hy, order)), N)


def build_frontal(field: FrameField, kind: str = "spherical") -> Frontal:
    """Sym (spherical) or Sym-Bobenko (cmc) surface over the frame field."""
    if kind not in ("spherical", "cmc"):
        raise InputError(f"unknown frontal kind {kind!r}")
    F1, dF1 = field.F_lambda1(), field.dF_lambda1()
    mask = np.asarray(field.ok, dtype=bool).copy()
    try:
        f = sym_from_values(F1, dF1)
        N = normal_from_values(F1)
    except ValidationError:
        # isolate the points where the factorization went wrong
        X = 1j * lm.mm2(dF1, _inv2(F1))
        mask &= lm.su2_defect(X) <= SU2_TOL
        f = np.real(np.stack([-2 * np.trace(lm.mm2(X, e), axis1=-2, axis2=-1) for e in lm.BASIS], -1))
        Y = lm.mm2(lm.mm2(F1, lm.E3), _inv2(F1))
        N = np.real(np.stack([-2 * np.trace(lm.mm2(Y, e), axis1=-2, axis2=-1) for e in lm.BASIS], -1))
    N = N / np.linalg.norm(N, axis=-1, keepdims=True)
    if kind == "cmc":
        f = f - N
    f = np.where(mask[..., None], f, np.nan)
    N = np.where(mask[..., None], N, np.nan)
    margin = regularity_margin(field)
    if kind == "cmc":
        # the parallel surface has its own singular set: use |mu| of f - N
        margin = np.abs(degeneracy(f, N, field.spec.hx, field.spec.hy))
    orientation = 1 if field.reflected else -1
    diag = {"frontal_defect": frontal_defect(f, N, field.spec)}
    if kind == "spherical":
        diag["defining_residual"] = defining_residual(f, N, field.spec, orientation)
    return Frontal(field.spec, f, N, mask, margin, kind, diag, orientation)


def frontal_defect(f, N, spec: GridSpec) -> float:
    """max |<f_x, N>|, |<f_y, N>| over interior points."""
    fx, fy = d_dx(f, spec.hx), d_dy(f, spec.hy)
    a = np.abs(np.einsum("...k,...k->...", fx, N))
    b = np.abs(np.einsum("...k,...k->...", fy, N))
    return _nanmax(np.maximum(a, b))


def _nanmax(a) -> float:
    """nanmax that returns NaN (without a warning) when nothing is finite."""
    a = np.asarray(a)
    return float(np.max(a[np.isfinite(a)])) if np.any(np.isfinite(a)) else float("nan")


def defining_residual(f, N, spec: GridSpec, orientation: int = 1) -> float:
    """max | f_w - i N x N_w | over interior points, w = z (orientation +1) or zbar (-1).

    Frames split with B in nonnegative powers (normalized potentials)
    produce the surface in the conjugate coordinate, f_x = -N x N_y.
    """
    s = 1j * orientation
    fz = 0.5 * (d_dx(f, spec.hx) - s * d_dy(f, spec.hy))
    Nz = 0.5 * (d_dx(N, spec.hx) - s * d_dy(N, spec.hy))
    r = fz - 1j * np.cross(N, Nz)
    return _nanmax(np.linalg.norm(r, axis=-1))


def parallel_surface(fr: Frontal, offset: float) -> Frontal:
    """f + offset N with the same normals; the kind is re-derived from curvature."""
    g = fr.f + offset * fr.N
    out = replace(fr, f=g, kind="parallel", diagnostics={})
    K, H = curvature_field(out)
    good = np.isfinite(K) & (fr.margin > REG_FLOOR)
    kind = "parallel"
    if np.any(good):
        if np.nanmedian(np.abs(K[good] - 1)) < 1e-2:
            kind = "spherical"
        elif np.nanmedian(np.abs(np.abs(H[good]) - 0.5)) < 1e-2:
            kind = "cmc"
    return replace(out, kind=kind)


# ----------------------------------------------------- curvature oracles

@dataclass(frozen=True)
class FundamentalForms:
    """(E, F, G) and (L, M, N) coefficients from the normal field and from the mesh."""

    first_N: tuple
    second_N: tuple
    first_f: tuple
    second_f: tuple


def _dot(a, b):
    return np.einsum("...k,...k->...", a, b)


def _forms_arrays(fr: Frontal):
    hx, hy = fr.spec.hx, fr.spec.hy
    N, f = fr.N, fr.f
    Nx, Ny = d_dx(N, hx), d_dy(N, hy)
    fx, fy = d_dx(f, hx), d_dy(f, hy)
    a, b = np.cross(N, Ny), -np.cross(N, Nx)
    first_N = (_dot(a, a), _dot(a, b), _dot(b, b))
    # f_x = orientation * N x N_y, so -<f_x, N_x> = orientation * <N, N_x x N_y>
    e = fr.orientation * _dot(N, np.cross(Nx, Ny))
    second_N = (e, np.zeros_like(e), e)
    first_f = (_dot(fx, fx), _dot(fx, fy), _dot(fy, fy))
    second_f = (-_dot(fx, Nx), -0.5 * (_dot(fx, Ny) + _dot(fy, Nx)), -_dot(fy, Ny))
    return first_N, second_N, first_f, second_f


def _check_point(fr: Frontal, point):
    i, j = point
    if not (0 < i < fr.spec.nx - 1 and 0 < j < fr.spec.ny - 1):
        raise InputError(f"grid point {point} is on the boundary")
    m = fr.margin[i, j]
    if not (m > REG_FLOOR):
        raise DPWError(f"point {point} is singular or masked (regularity margin {m:.3e})")


def fundamental_forms(fr: Frontal, point) -> FundamentalForms:
    """Both discretizations of the fundamental forms at an interior regular point."""
    _check_point(fr, point)
    i, j = point
    arrs = _forms_arrays(fr)
    return FundamentalForms(*(tuple(float(c[i, j]) for c in form) for form in arrs))


def _KH(first, second):
    E, F, G = first
    L, M, Nn = second
    det1 = E * G - F * F
    # det I vanishes on singular sets; those points are excluded downstream
    with np.errstate(divide="ignore", invalid="ignore"):
        K = (L * Nn - M * M) / det1
        H = (E * Nn - 2 * F * M + G * L) / (2 * det1)
    return K, H


def curvature_field(fr: Frontal, source: str = "mesh"):
    """Gauss and mean curvature over the grid (NaN on the boundary and at masked points).

    ``source="mesh"`` uses the forms built from f and N derivatives;
    ``source="normal"`` uses the forms built from N alone.
    """
    first_N, second_N, first_f, second_f = _forms_arrays(fr)
    if source == "normal":
        return _KH(first_N, second_N)
    return _KH(first_f, second_f)


def gauss_mean_curvature(fr: Frontal, point, source: str = "mesh") -> tuple[float, float]:
    """(K, H) at an interior regular point."""
    _check_point(fr, point)
    i, j = point
    first_N, second_N, first_f, second_f = _forms_arrays(fr)
    first, second = (first_N, second_N) if source == "normal" else (first_f, second_f)
    det1 = first[0][i, j] * first[2][i, j] - first[1][i, j] ** 2
    if not det1 > 1e-12:
        raise DPWError(f"metric is degenerate at {point} (det I = {det1:.3e})")
    K, H = _KH(tuple(c[i, j] for c in first), tuple(c[i, j] for c in second))
    return float(K), float(H)


# ---------------------------------------------------------- curve oracles

@dataclass(frozen=True)
class FrenetCurve:
    s: np.ndarray
    points: np.ndarray
    T: np.ndarray
    Nn: np.ndarray
    B: np.ndarray


def frenet_reconstruct(kappa, tau, s_range=(-1.0, 1.0), n: int = 201, s0: float | None = None) -> FrenetCurve:
    """Unit-speed curve with curvature kappa and torsion tau.

    At ``s0`` (default: the start of the range) the curve sits at the origin
    with tangent e1 and principal normal e2.
    """
    k, t = as_fn(kappa), as_fn(tau)
    s0 = s_range[0] if s0 is None else s0

    def rhs(s, y):
        kv = float(np.real(k(complex(s))))
        tv = float(np.real(t(complex(s))))
        T, Nn, B = y[3:6], y[6:9], y[9:12]
        return np.concatenate([T, kv * Nn, -kv * T + tv * B, -tv * Nn])

    y0 = np.concatenate([np.zeros(3), np.eye(3).ravel()])
    s = np.linspace(s_range[0], s_range[1], n)
    out = np.empty((n, 12))
    for sl, end in ((s >= s0, s_range[1]), (s < s0, s_range[0])):
        if not np.any(sl) or end == s0:
            if np.any(sl):
                out[sl] = y0
            continue
        ts = s[sl] if end > s0 else s[sl][::-1]
        sol = solve_ivp(rhs, (s0, end), y0, t_eval=ts, method="DOP853", rtol=1e-12, atol=1e-13)
        vals = sol.y.T
        out[sl] = vals if end > s0 else vals[::-1]
    return FrenetCurve(s, out[:, :3], out[:, 3:6], out[:, 6:9], out[:, 9:12])


def procrustes(a: np.ndarray, b: np.ndarray, allow_reflection: bool = False):
    """Best rigid motion x -> R x + t carrying a onto b; returns (max residual, R, t)."""
    ca, cb = a.mean(axis=0), b.mean(axis=0)
    H = (a - ca).T @ (b - cb)
    U, _, Vt = np.linalg.svd(H)
    D = np.eye(3)
    if not allow_reflection and np.linalg.det(Vt.T @ U.T) < 0:
        D[2, 2] = -1
    R = Vt.T @ D @ U.T
    t = cb - R @ ca
    res = np.linalg.norm(a @ R.T + t - b, axis=1)
    return float(res.max()), R, t


def sphere_fit(points: np.ndarray):
    """Algebraic least-squares sphere; returns (center, radius, max | |p - c| - r |)."""
    p = points[np.all(np.isfinite(points), axis=1)]
    A = np.column_stack([2 * p, np.ones(len(p))])
    rhs = np.sum(p * p, axis=1)
    sol, *_ = np.linalg.lstsq(A, rhs, rcond=None)
    c = sol[:3]
    r = float(np.sqrt(sol[3] + c @ c))
    res = float(np.max(np.abs(np.linalg.norm(p - c, axis=1) - r)))
    return c, r, res
