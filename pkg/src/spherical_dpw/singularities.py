"""Singular points: analytic classification from Cauchy data, mesh-level locus
tracing, and branch points of normalized potentials."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from skimage.measure import find_contours

from .analytic import AnalyticFn, as_fn, taylor_coefficients
from .errors import EvaluationError
from .surface import Frontal, d_dx, d_dy

CLASS_TOL = 1e-9
TAYLOR_TERMS = 8


class SingularityLabel(str, enum.Enum):
    REGULAR = "Regular"
    BRANCH_POINT = "BranchPoint"
    CUSPIDAL_EDGE = "CuspidalEdge"
    SWALLOWTAIL = "Swallowtail"
    CUSPIDAL_BUTTERFLY = "CuspidalButterfly"
    CUSPIDAL_BEAKS = "CuspidalBeaks"
    CONE_POINT = "ConePoint"
    DEGENERATE = "DegenerateUnclassified"
    # front singularities that cannot appear on spherical frontals
    CUSPIDAL_LIPS = "CuspidalLips"
    D4_PLUS = "D4Plus"
    D4_MINUS = "D4Minus"

    def __str__(self):
        return self.value


REJECTED = frozenset({SingularityLabel.CUSPIDAL_LIPS, SingularityLabel.D4_PLUS, SingularityLabel.D4_MINUS})


@dataclass(frozen=True)
class Classification:
    label: SingularityLabel
    location: float | complex
    criterion: str
    margins: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        loc = self.location
        loc = [loc.real, loc.imag] if isinstance(loc, complex) else float(loc)
        return {"location": loc, "label": self.label.value, "criterion": self.criterion,
                "margins": {k: (v if isinstance(v, (str, bool)) else float(v)) for k, v in self.margins.items()}}


def _real(f: AnalyticFn, x: float) -> float:
    return float(np.real(f(complex(x))))


# ------------------------------------------------------- curve criteria

def classify_regular_curve_point(kappa, tau, x0: float, class_tol: float = CLASS_TOL) -> Classification:
    """Singular point of the singular-curve solution with curvature kappa and torsion tau."""
    k, t = as_fn(kappa), as_fn(tau)
    kv, kp, tv = _real(k, x0), _real(k.derivative(), x0), _real(t, x0)
    m = {"kappa": kv, "kappa_prime": kp, "tau": tv}
    if abs(kv) > class_tol:
        return Classification(SingularityLabel.CUSPIDAL_EDGE, x0, "kappa(x0) != 0", m)
    if abs(kp) > class_tol and abs(tv) > class_tol:
        return Classification(SingularityLabel.CUSPIDAL_BEAKS, x0, "kappa(x0) = 0, kappa'(x0) != 0, tau(x0) != 0", m)
    if abs(tv) <= class_tol:
        note = "kappa(x0) = tau(x0) = 0; numerically the image looks cone-like"
    else:
        note = "kappa(x0) = kappa'(x0) = 0; numerically two cuspidal edges cross"
    return Classification(SingularityLabel.DEGENERATE, x0, note, m)


def vanishes_identically(f: AnalyticFn, x0: float, interval=None, class_tol: float = CLASS_TOL,
                         terms: int = TAYLOR_TERMS, samples: int = 64) -> bool:
    """Semi-decision for f == 0: leading Taylor coefficients at x0 and interval samples all vanish."""
    if f.is_zero:
        return True
    coeffs = taylor_coefficients(f, x0, terms)
    if max(abs(c) for c in coeffs) > class_tol:
        return False
    lo, hi = interval if interval is not None else (x0 - 1.0, x0 + 1.0)
    x = np.linspace(lo, hi, samples).astype(complex)
    return bool(np.max(np.abs(f(x))) <= class_tol)


def classify_general_curve_point(b, c, x0: float, interval=None, class_tol: float = CLASS_TOL) -> Classification:
    """Singular point of the non-degenerate singular-curve solution with data (b, c)."""
    b, c = as_fn(b), as_fn(c)
    b1 = b.derivative()
    bv, bp, bpp, cv = _real(b, x0), _real(b1, x0), _real(b1.derivative(), x0), _real(c, x0)
    m = {"b": bv, "b_prime": bp, "b_second": bpp, "c": cv}
    if abs(cv) <= class_tol:
        return Classification(SingularityLabel.DEGENERATE, x0, "c(x0) = 0 (degenerate singular curve)", m)
    if vanishes_identically(b, x0, interval, class_tol):
        return Classification(SingularityLabel.CONE_POINT, x0,
                              f"b == 0 ({TAYLOR_TERMS} Taylor coefficients and interval samples vanish)", m)
    if abs(bv) > class_tol:
        return Classification(SingularityLabel.CUSPIDAL_EDGE, x0, "b(x0) != 0", m)
    if abs(bp) > class_tol:
        return Classification(SingularityLabel.SWALLOWTAIL, x0, "b(x0) = 0, b'(x0) != 0", m)
    if abs(bpp) > class_tol:
        return Classification(SingularityLabel.CUSPIDAL_BUTTERFLY, x0, "b(x0) = b'(x0) = 0, b''(x0) != 0", m)
    return Classification(SingularityLabel.DEGENERATE, x0, "b(x0) = b'(x0) = b''(x0) = 0", m)


def admissible_bifurcation_filter(label) -> bool:
    """False for front singularities excluded on spherical frontals (lips, D4+-)."""
    return SingularityLabel(label) not in REJECTED


# ---------------------------------------------------------------- roots

def _newton_multiple(f: AnalyticFn, z0, iters: int = 60, tol: float = 1e-14):
    """Newton on f/f', which has simple zeros even at multiple roots of f."""
    f1 = f.derivative()
    f2 = f1.derivative()
    z = complex(z0)
    for _ in range(iters):
        try:
            a, a1 = complex(f(z)), complex(f1(z))
        except EvaluationError:
            return z, False
        if a == 0:
            return z, True
        if a1 == 0:
            return z, False
        a2 = complex(f2(z))
        g = a / a1
        dg = 1 - a * a2 / (a1 * a1)
        if dg == 0:
            return z, False
        step = g / dg
        z -= step
        if abs(step) <= tol * max(1.0, abs(z)):
            return z, True
    return z, False


def real_zeros(f, interval, samples: int = 257, tol: float = CLASS_TOL) -> list[float]:
    """Zeros of a real-analytic function on an interval: sign changes and touching minima, polished."""
    f = as_fn(f)
    if f.is_zero:
        return []
    x = np.linspace(interval[0], interval[1], samples)
    v = np.real(f(x.astype(complex)))
    cand = list(x[:-1][np.sign(v[:-1]) * np.sign(v[1:]) < 0])
    a = np.abs(v)
    loc_min = np.flatnonzero((a[1:-1] <= a[:-2]) & (a[1:-1] <= a[2:])) + 1
    cand += list(x[loc_min])
    cand += list(x[a <= tol])
    out = []
    for c in cand:
        z, ok = _newton_multiple(f, c)
        r = z.real
        if ok and abs(z.imag) < 1e-8 and interval[0] - 1e-12 <= r <= interval[1] + 1e-12 and abs(_real(f, r)) <= tol:
            if all(abs(r - o) > 1e-7 for o in out):
                out.append(r)
    return sorted(out)


@dataclass(frozen=True)
class BranchPointReport:
    points: list
    unpolished: list
    basepoint: complex
    basepoint_rank1: bool
    basepoint_values: tuple
    rank1_samples: np.ndarray
    rank1_heuristic: bool = True


def branch_points(a, b, rect=((-1.0, 1.0), (-1.0, 1.0)), basepoint: complex = 0.0, n_scan: int = 81,
                  tol: float = 1e-8, rank1_tol: float = 1e-2) -> BranchPointReport:
    """Common zeros of (a, b) in the rectangle, plus the |a| = |b| rank-1 test.

    The rank-1 criterion is exact only at the basepoint; elsewhere the
    samples with ||a| - |b|| small are returned as a heuristic locus.
    """
    a, b = as_fn(a, "z"), as_fn(b, "z")
    (x0, x1), (y0, y1) = rect
    X, Y = np.meshgrid(np.linspace(x0, x1, n_scan), np.linspace(y0, y1, n_scan), indexing="ij")
    Z = X + 1j * Y
    va = np.abs(a(Z)) * np.ones(Z.shape)
    vb = np.abs(b(Z)) * np.ones(Z.shape)

    points, unpolished = [], []
    if not (a.is_zero and b.is_zero):
        f, g = (b, a) if a.is_zero else (a, b)
        vf = vb if a.is_zero else va
        pad = np.pad(vf, 1, constant_values=np.inf)
        is_min = np.ones(vf.shape, dtype=bool)
        for di in (-1, 0, 1):
            for dj in (-1, 0, 1):
                if di or dj:
                    is_min &= vf <= pad[1 + di:1 + di + vf.shape[0], 1 + dj:1 + dj + vf.shape[1]]
        for z0 in Z[is_min]:
            z, ok = _newton_multiple(f, z0)
            inside = x0 - 1e-12 <= z.real <= x1 + 1e-12 and y0 - 1e-12 <= z.imag <= y1 + 1e-12
            if not ok:
                if abs(complex(f(z0))) < rank1_tol:
                    unpolished.append(complex(z0))
                continue
            if not inside or abs(complex(f(z))) > tol or abs(complex(g(z))) > tol:
                continue
            if all(abs(z - p) > 1e-6 for p in points):
                points.append(complex(z))
    za, zb = complex(a(complex(basepoint))), complex(b(complex(basepoint)))
    rank1 = abs(abs(za) - abs(zb)) <= tol and abs(za) > tol
    scale = np.maximum(np.maximum(va, vb), 1e-300)
    rank1_samples = Z[(np.abs(va - vb) <= rank1_tol * scale) & (va > tol)]
    return BranchPointReport(points, unpolished, complex(basepoint), bool(rank1), (za, zb), rank1_samples)


# ----------------------------------------------------------- mesh level

def degeneracy_field(fr: Frontal) -> np.ndarray:
    """mu = <f_x x f_y, N> on the grid (NaN on the boundary and at masked points)."""
    return fr.mu


def trace_singular_locus(fr: Frontal, mu: np.ndarray | None = None) -> list[np.ndarray]:
    """Zero contours of mu as polylines of (x, y) coordinates (marching squares)."""
    mu = degeneracy_field(fr) if mu is None else mu
    inner = mu[1:-1, 1:-1]
    mask = np.isfinite(inner)
    if inner.shape[0] < 2 or inner.shape[1] < 2 or not np.any(mask):
        return []
    contours = find_contours(np.where(mask, inner, 0.0), 0.0, mask=mask)
    x0, y0 = fr.spec.x_range[0], fr.spec.y_range[0]
    return [np.column_stack([x0 + (c[:, 0] + 1) * fr.spec.hx, y0 + (c[:, 1] + 1) * fr.spec.hy]) for c in contours]


def null_direction(fr: Frontal, i: int, j: int) -> np.ndarray:
    """Unit kernel direction (in the (x, y) plane) of the finite-difference df at a grid point."""
    fx = d_dx(fr.f, fr.spec.hx)[i, j]
    fy = d_dy(fr.f, fr.spec.hy)[i, j]
    J = np.column_stack([fx, fy])
    _, _, vt = np.linalg.svd(J)
    v = vt[-1]
    return v / np.linalg.norm(v)


def direction_alignment(v: np.ndarray, w) -> float:
    """|sin| of the angle between two plane directions."""
    w = np.asarray(w, dtype=float)
    w = w / np.linalg.norm(w)
    return float(abs(v[0] * w[1] - v[1] * w[0]))


def image_diameter(points: np.ndarray) -> float:
    p = points[np.all(np.isfinite(points), axis=-1)]
    if len(p) < 2:
        return 0.0
    c = p.mean(axis=0)
    return float(2 * np.max(np.linalg.norm(p - c, axis=1)))


# ------------------------------------------------------ curve surveys

def survey_singular_curve(kappa, tau, interval) -> list[Classification]:
    """Classify the zeros of kappa on the interval, plus one generic sample if kappa is not identically 0."""
    k = as_fn(kappa)
    out = [classify_regular_curve_point(kappa, tau, x) for x in real_zeros(k, interval)]
    generic = _generic_point(interval, [c.location for c in out])
    c = classify_regular_curve_point(kappa, tau, generic)
    if c.label is SingularityLabel.CUSPIDAL_EDGE:
        out.append(c)
    return sorted(out, key=lambda c: c.location)


def survey_general_curve(b, c, interval) -> list[Classification]:
    """Classify the zeros of b and c on the interval (or report a cone point)."""
    b, c = as_fn(b), as_fn(c)
    mid = 0.5 * (interval[0] + interval[1])
    if vanishes_identically(b, mid, interval):
        return [classify_general_curve_point(b, c, mid, interval)]
    xs = sorted(set(real_zeros(b, interval)) | set(real_zeros(c, interval)))
    out = [classify_general_curve_point(b, c, x, interval) for x in xs]
    generic = _generic_point(interval, xs)
    g = classify_general_curve_point(b, c, generic, interval)
    if g.label is SingularityLabel.CUSPIDAL_EDGE:
        out.append(g)
    return sorted(out, key=lambda c: c.location)


def _generic_point(interval, avoid) -> float:
    for t in (0.5, 0.3, 0.7, 0.1, 0.9):
        x = interval[0] + t * (interval[1] - interval[0])
        if all(abs(x - a) > 1e-3 for a in avoid):
            return x
    return interval[0]
