"""Holomorphic frames on a coordinate rectangle and their Iwasawa factors.

Phi solves Phi^-1 dPhi = eta with Phi(z0) = I.  It is integrated with
classical RK4 directly on the loop coefficients: first along the horizontal
line through z0, then up and down every grid column at once.  Each grid
point is then Iwasawa-factored.

Two splittings are in use.  Normalized potentials (lam^-1 paired with dz)
use Phi = F B with B in nonnegative powers of lam.  The Cauchy-problem
potentials are written so that lam^1 pairs with dz; for them the frame uses
Phi = F B with B in nonpositive powers, computed as the standard split of
Phi(z, 1/lam).  Either way the Maurer-Cartan form of F reads
U_p lam^s dz + U_k dz - (conjugate terms), s = +1 or -1, and ``plus`` holds
B written in the loop variable in which it has nonnegative powers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import laurent as lm
from .errors import EvaluationError, InputError
from .factorization import Tolerances, iwasawa
from .laurent import LaurentMatrix
from .potentials import Potential


FRAME_DET_TOL = 1e-6


@dataclass(frozen=True)
class GridSpec:
    """Rectangle [x0, x1] x [y0, y1] sampled on an nx-by-ny grid.

    The basepoint defaults to the point of the rectangle closest to 0 along
    each axis that contains 0, otherwise to the lower-left corner coordinate.
    """

    x_range: tuple = (-1.0, 1.0)
    y_range: tuple = (-1.0, 1.0)
    nx: int = 201
    ny: int = 201
    basepoint: complex | None = None

    def __post_init__(self):
        if self.nx < 2 or self.ny < 2:
            raise InputError("grid needs nx, ny >= 2")
        if not (self.x_range[1] > self.x_range[0] and self.y_range[1] > self.y_range[0]):
            raise InputError("grid ranges must be non-degenerate")
        z0 = self.z0
        if not (self.x_range[0] <= z0.real <= self.x_range[1] and self.y_range[0] <= z0.imag <= self.y_range[1]):
            raise InputError(f"basepoint {z0} lies outside the rectangle")

    @property
    def z0(self) -> complex:
        if self.basepoint is not None:
            return complex(self.basepoint)
        x0, x1 = self.x_range
        y0, y1 = self.y_range
        bx = 0.0 if x0 <= 0.0 <= x1 else x0
        by = 0.0 if y0 <= 0.0 <= y1 else y0
        return complex(bx, by)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(*self.x_range, self.nx)

    @property
    def y(self) -> np.ndarray:
        return np.linspace(*self.y_range, self.ny)

    @property
    def hx(self) -> float:
        return (self.x_range[1] - self.x_range[0]) / (self.nx - 1)

    @property
    def hy(self) -> float:
        return (self.y_range[1] - self.y_range[0]) / (self.ny - 1)

    def z(self) -> np.ndarray:
        """Complex coordinates, shape (nx, ny), indexed [i, j] = x_i + i y_j."""
        X, Y = np.meshgrid(self.x, self.y, indexing="ij")
        return X + 1j * Y


@dataclass(frozen=True, eq=False)
class FrameField:
    """Frames over a grid; all per-point arrays are indexed [ix, iy]."""

    spec: GridSpec
    n_trunc: int
    phi: LaurentMatrix
    unitary: LaurentMatrix
    plus: LaurentMatrix
    rho: np.ndarray
    residual: np.ndarray
    ok: np.ndarray
    diagnostics: dict = field(default_factory=dict)
    reflected: bool = False

    @property
    def up_exponent(self) -> int:
        """Loop exponent paired with dz in the Maurer-Cartan form of F."""
        return 1 if self.reflected else -1

    def F_at(self, i: int, j: int) -> LaurentMatrix:
        return self.unitary[i, j]

    def F_lambda1(self) -> np.ndarray:
        """F at lambda = 1 over the grid, shape (nx, ny, 2, 2)."""
        return self.unitary.coeffs.sum(axis=-3)

    def dF_lambda1(self) -> np.ndarray:
        """(lambda dF/dlambda) at lambda = 1 over the grid."""
        n = np.arange(self.unitary.lo, self.unitary.hi + 1)
        return np.einsum("...nij,n->...ij", self.unitary.coeffs, n)


# ------------------------------------------------------------ integration

def _rmul(phi: np.ndarray, a: np.ndarray, a_lo: int, n: int):
    """(phi * a) truncated to [-n, n]; phi has exponents -n..n.

    Returns the product and the largest discarded coefficient norm.
    """
    width = 2 * n + 1
    out = np.zeros_like(phi)
    tail = 0.0
    for k in range(a.shape[-3]):
        e = a_lo + k
        ak = a[..., k:k + 1, :, :]
        if not np.any(ak):
            continue
        if e >= 0:
            out[..., e:, :, :] += lm.mm2(phi[..., :width - e, :, :], ak)
            if e:
                tail = max(tail, float(np.max(np.abs(lm.mm2(phi[..., width - e:, :, :], ak)))))
        else:
            out[..., :width + e, :, :] += lm.mm2(phi[..., -e:, :, :], ak)
            tail = max(tail, float(np.max(np.abs(lm.mm2(phi[..., :-e, :, :], ak)))))
    return out, tail


def _eval_potential(eta: Potential, z: np.ndarray) -> np.ndarray:
    try:
        return eta.evaluate(z)
    except EvaluationError as exc:
        raise EvaluationError(f"potential cannot be evaluated inside the rectangle: {exc}") from exc


def _rk4_leg(phi0: np.ndarray, t: np.ndarray, k0: int, eta_fine: np.ndarray, a_lo: int, direction: complex,
             n: int, substeps: int):
    """Integrate dPhi/dt = Phi eta(t) * direction from node k0 outward to every node of t.

    ``eta_fine[m]`` is eta on the refined parameter grid that splits every
    node interval into ``2 * substeps`` equal parts.  Returns Phi at all
    nodes, shape (len(t),) + phi0.shape, and the largest truncation tail.
    """
    out = np.empty((len(t),) + phi0.shape, dtype=complex)
    out[k0] = phi0
    tail = 0.0
    r = 2 * substeps
    for step in (1, -1):
        phi = phi0
        k = k0
        while 0 <= k + step < len(t):
            h = (t[k + step] - t[k]) / substeps * direction
            base = k * r
            for s in range(substeps):
                i0 = base + step * 2 * s
                A0, Am, A1 = eta_fine[i0], eta_fine[i0 + step], eta_fine[i0 + 2 * step]
                k1, t1 = _rmul(phi, A0, a_lo, n)
                k2, t2 = _rmul(phi + 0.5 * h * k1, Am, a_lo, n)
                k3, t3 = _rmul(phi + 0.5 * h * k2, Am, a_lo, n)
                k4, t4 = _rmul(phi + h * k3, A1, a_lo, n)
                phi = phi + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
                tail = max(tail, abs(h) * max(t1, t2, t3, t4))
            k += step
            out[k] = phi
    return out, tail


def _fine(t: np.ndarray, substeps: int) -> np.ndarray:
    r = 2 * substeps
    u = np.arange(r) / r
    pts = (t[:-1, None] + np.diff(t)[:, None] * u).ravel()
    return np.append(pts, t[-1])


def _with_node(values: np.ndarray, v: float):
    nodes = np.union1d(values, [v])
    return nodes, int(np.searchsorted(nodes, v)), np.searchsorted(nodes, values)


def integrate_phi(eta: Potential, spec: GridSpec, n_trunc: int = lm.DEFAULT_N_TRUNC,
                  substeps: int = 1) -> tuple[LaurentMatrix, dict]:
    """Phi over the grid along the path z0 -> (x, Im z0) -> (x, y)."""
    n = n_trunc
    if eta.lo < -n or eta.hi > n:
        raise InputError("potential degree exceeds the truncation degree")
    z0 = spec.z0
    xs, kx0, ix = _with_node(spec.x, z0.real)
    ys, ky0, iy = _with_node(spec.y, z0.imag)
    ident = np.zeros((2 * n + 1, 2, 2), dtype=complex)
    ident[n] = np.eye(2)

    # horizontal leg through the basepoint
    xf = _fine(xs, substeps)
    eta_h = _eval_potential(eta, xf + 1j * z0.imag)
    row, tail_h = _rk4_leg(ident, xs, kx0, eta_h, eta.lo, 1.0, n, substeps)
    row = row[ix]                                               # (nx, 2n+1, 2, 2)

    # vertical legs, all columns at once
    yf = _fine(ys, substeps)
    eta_v = _eval_potential(eta, spec.x[None, :] + 1j * yf[:, None])   # (nfine, nx, E, 2, 2)
    cols, tail_v = _rk4_leg(row, ys, ky0, eta_v, eta.lo, 1j, n, substeps)
    phi = np.moveaxis(cols[iy], 0, 1)                           # (nx, ny, ...)
    diag = {"truncation_tail": max(tail_h, tail_v), "substeps": substeps}
    return lm._trusted(phi, -n, True), diag


def _invert(L: LaurentMatrix) -> LaurentMatrix:
    """L(1/lam)."""
    return lm._trusted(L.coeffs[..., ::-1, :, :], -L.hi, L.twisted, L.tail)


def integrate_frame(eta: Potential, spec: GridSpec, n_trunc: int = lm.DEFAULT_N_TRUNC,
                    tol: Tolerances | None = None, substeps: int = 1, workers: int = 1,
                    reflected: bool | None = None, max_substeps: int | None = None) -> FrameField:
    """Integrate Phi over ``spec`` and Iwasawa-factor every grid point.

    ``reflected`` selects the splitting (default: ``eta.reflected_split``).
    Points whose factorization residual exceeds the tolerance are flagged in
    ``ok`` instead of aborting the run.  With ``max_substeps`` the RK4
    substeps are doubled (up to that bound) while the det drift of Phi
    exceeds a tenth of the Iwasawa tolerance.
    """
    tol = tol or Tolerances()
    reflected = eta.reflected_split if reflected is None else bool(reflected)
    lam = lm.circle_samples(4 * n_trunc)
    while True:
        phi, diag = integrate_phi(eta.inverted() if reflected else eta, spec, n_trunc, substeps)
        det_err = np.max(np.abs(lm.det2(lm.evaluate(phi, lam)) - 1.0), axis=-1)
        if max_substeps is None or np.max(det_err) <= 0.1 * tol.iwasawa_tol or 2 * substeps > max_substeps:
            break
        substeps *= 2
    diag["max_det_defect"] = float(np.max(det_err))
    # RK4 and truncation do not preserve det = 1 exactly; points whose drift
    # exceeds the frame tolerance are flagged, the factorization judges the
    # rest by its own residual
    det_floor = max(tol.det_tol, FRAME_DET_TOL)
    ftol = Tolerances(tol.iwasawa_tol, np.inf, tol.cond_floor)
    res = iwasawa(phi, n_trunc, ftol, strict=False, workers=workers)
    ok = res.ok & (det_err <= det_floor)
    diag["max_iwasawa_residual"] = float(np.max(res.residual))
    diag["flagged_points"] = int(np.count_nonzero(~ok))
    F = res.unitary_part
    if reflected:
        phi, F = _invert(phi), _invert(F)
    return FrameField(spec, n_trunc, phi, F, res.plus_part, np.asarray(res.rho),
                      np.asarray(res.residual), np.asarray(ok), diag, reflected)


# ------------------------------------------------------ path independence

def _segment(eta: Potential, phi: np.ndarray, z_start: np.ndarray, dz: np.ndarray, steps: int, n: int):
    """RK4 along straight segments z_start + t dz, t in [0, 1], vectorised over a batch."""
    h = 1.0 / steps
    t = np.arange(2 * steps + 1) * (0.5 * h)
    A = _eval_potential(eta, z_start[None, :] + t[:, None] * dz[None, :])   # all half steps at once
    d = (h * dz)[:, None, None, None]
    for k in range(steps):
        A0, Am, A1 = A[2 * k], A[2 * k + 1], A[2 * k + 2]
        k1, _ = _rmul(phi, A0, eta.lo, n)
        k2, _ = _rmul(phi + 0.5 * d * k1, Am, eta.lo, n)
        k3, _ = _rmul(phi + 0.5 * d * k2, Am, eta.lo, n)
        k4, _ = _rmul(phi + d * k3, A1, eta.lo, n)
        phi = phi + (d / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return phi


def path_independence_check(eta: Potential, spec: GridSpec, probes: int = 8, n_trunc: int = lm.DEFAULT_N_TRUNC,
                            seed: int = 0, step: float | None = None, refine: int = 1) -> float:
    """Largest circle-norm gap between horizontal-first and vertical-first paths.

    Probe points are drawn uniformly from the rectangle interior; both paths
    use RK4 with step close to ``step`` (default: the grid spacing).  The
    step counts are then multiplied by ``refine``, so ``refine=2`` halves
    every step exactly.
    """
    rng = np.random.default_rng(seed)
    z0 = spec.z0
    w = rng.uniform(spec.x_range[0], spec.x_range[1], probes) + 1j * rng.uniform(spec.y_range[0], spec.y_range[1], probes)
    h = step or min(spec.hx, spec.hy)
    n = n_trunc
    start = np.zeros((probes, 2 * n + 1, 2, 2), dtype=complex)
    start[:, n] = np.eye(2)
    z0v = np.full(probes, z0)
    dx = (w.real - z0.real).astype(complex)
    dy = 1j * (w.imag - z0.imag)
    sx = refine * max(1, int(np.ceil(np.max(np.abs(dx)) / h)))
    sy = refine * max(1, int(np.ceil(np.max(np.abs(dy)) / h)))

    corner_a = z0v + dx
    pa = _segment(eta, _segment(eta, start, z0v, dx, sx, n), corner_a, dy, sy, n)
    corner_b = z0v + dy
    pb = _segment(eta, _segment(eta, start, z0v, dy, sy, n), corner_b, dx, sx, n)
    diff = lm._trusted(pa - pb, -n, False)
    return float(np.max(lm.circle_max_norm(diff)))


# ------------------------------------------------------------- U_p

@dataclass(frozen=True)
class UpResult:
    Up: np.ndarray
    margin: float
    Uk: np.ndarray


def maurer_cartan_dz(field: FrameField, i: int, j: int) -> LaurentMatrix:
    """dz-part (1/2)(F^-1 F_x - i F^-1 F_y) of the Maurer-Cartan form at an interior point."""
    nx, ny = field.spec.nx, field.spec.ny
    if not (0 < i < nx - 1 and 0 < j < ny - 1):
        raise InputError(f"grid point ({i}, {j}) is on the boundary; central differences need an interior point")
    U = field.unitary
    Fx = (U.coeffs[i + 1, j] - U.coeffs[i - 1, j]) / (2 * field.spec.hx)
    Fy = (U.coeffs[i, j + 1] - U.coeffs[i, j - 1]) / (2 * field.spec.hy)
    Finv = lm.circle_adjoint(U[i, j])
    dz = lm._trusted(0.5 * (Fx - 1j * Fy), U.lo, True)
    return lm.multiply(Finv, dz, n_trunc=field.n_trunc + 1, tail_tol=np.inf)


def extract_Up(field: FrameField, point) -> UpResult:
    """Coefficient U_p of the dz part of F^-1 dF and the regularity margin ||u12| - |u21||.

    U_p is the coefficient of lam^s, s = ``field.up_exponent``; ``Uk`` is the
    lam^0 coefficient of the same component.
    """
    i, j = point
    A = maurer_cartan_dz(field, i, j)
    Up = A.coeff(field.up_exponent)
    Uk = A.coeff(0)
    return UpResult(Up, float(abs(abs(Up[0, 1]) - abs(Up[1, 0]))), Uk)


def regularity_margin(field: FrameField) -> np.ndarray:
    """||u12| - |u21|| of U_p at all interior points (NaN on the boundary)."""
    U = field.unitary
    c = U.coeffs
    hx, hy = field.spec.hx, field.spec.hy
    out = np.full((field.spec.nx, field.spec.ny), np.nan)
    Fx = (c[2:, 1:-1] - c[:-2, 1:-1]) / (2 * hx)
    Fy = (c[1:-1, 2:] - c[1:-1, :-2]) / (2 * hy)
    dz = 0.5 * (Fx - 1j * Fy)
    Fs = np.conj(np.swapaxes(c[1:-1, 1:-1, ::-1], -1, -2))       # circle adjoint, exponents -hi..-lo
    # U_p coefficient of Fs * dz: sum over a + b = s
    lo, hi = U.lo, U.hi
    s = field.up_exponent
    up = np.zeros(dz.shape[:2] + (2, 2), dtype=complex)
    for b in range(lo, hi + 1):
        a = s - b
        if -hi <= a <= -lo:
            up += lm.mm2(Fs[..., a + hi, :, :], dz[..., b - lo, :, :])
    out[1:-1, 1:-1] = np.abs(np.abs(up[..., 0, 1]) - np.abs(up[..., 1, 0]))
    return out
