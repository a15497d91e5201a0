"""Holomorphic potentials built from curve or symmetry data.

Each constructor expands its formula in the basis e1, e2, e3 into explicit
matrix entries (``AnalyticFn`` trees), so frame integration only ever sees
plain matrix-valued functions of z.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from . import laurent as lm
from .analytic import AnalyticFn, as_fn
from .errors import EvaluationError, ValidationError

ADMISSIBILITY_SAMPLES = 64


class AdmissibilityWarning(UserWarning):
    """Cauchy data crosses a hypothesis of the construction (singularity expected)."""


# ------------------------------------------------------------------ types

@dataclass(frozen=True, eq=False)
class Potential:
    """sum_n coeffs[n] lam**n dz, coeffs[n] a 2x2 nested list of AnalyticFn."""

    coeffs: dict
    kind: str
    data: dict = field(default_factory=dict)

    @property
    def lo(self) -> int:
        return min(self.coeffs)

    @property
    def hi(self) -> int:
        return max(self.coeffs)

    def entry(self, n: int, i: int, j: int) -> AnalyticFn:
        return self.coeffs[n][i][j]

    def evaluate(self, z) -> np.ndarray:
        """Coefficient array of shape ``shape(z) + (hi - lo + 1, 2, 2)``."""
        z = np.asarray(z, dtype=complex)
        out = np.zeros(z.shape + (self.hi - self.lo + 1, 2, 2), dtype=complex)
        for n, m in self.coeffs.items():
            for i in range(2):
                for j in range(2):
                    f = m[i][j]
                    if f.is_zero:
                        continue
                    out[..., n - self.lo, i, j] = f(z) if z.ndim else f(complex(z))
        return out

    @property
    def reflected_split(self) -> bool:
        """Whether the frame uses the split Phi = F B_minus (see ``frame``).

        The Cauchy-problem potentials pair their lam^1 coefficient with dz,
        normalized potentials pair lam^-1 with dz.
        """
        return self.kind != "normalized"

    def inverted(self) -> "Potential":
        """The same potential in the loop variable 1/lam."""
        return Potential({-n: m for n, m in self.coeffs.items()}, self.kind, self.data)

    def at(self, z: complex) -> lm.LaurentMatrix:
        return lm.LaurentMatrix(self.evaluate(z), self.lo)

    def check_twisted(self, points, tol: float = lm.DEFAULT_TWIST_TOL) -> tuple[bool, dict]:
        return lm.check_twisted(lm.LaurentMatrix(self.evaluate(np.asarray(points)), self.lo), tol)


@dataclass(frozen=True, eq=False)
class CauchyData:
    """Curve data for one of the Cauchy problems.

    ``variant`` is one of geodesic, general, singular, singular_general, cmc;
    ``functions`` maps names (kappa, tau, kappa_n, kappa_g, mu, b, c) to
    ``AnalyticFn``.
    """

    variant: str
    functions: dict
    interval: tuple = (-1.0, 1.0)

    def __getitem__(self, name) -> AnalyticFn:
        return self.functions[name]


_REQUIRED = {
    "geodesic": ("kappa", "tau"),
    "general": ("kappa_n", "kappa_g", "mu"),
    "singular": ("kappa", "tau"),
    "singular_general": ("b", "c"),
    "cmc": ("kappa_n", "kappa_g", "mu"),
}


def cauchy_data(variant: str, interval=(-1.0, 1.0), **funcs) -> CauchyData:
    if variant not in _REQUIRED:
        raise ValidationError(f"unknown Cauchy data variant {variant!r}")
    missing = set(_REQUIRED[variant]) - set(funcs)
    if missing:
        raise ValidationError(f"{variant} data needs {sorted(missing)}")
    return CauchyData(variant, {k: as_fn(v) for k, v in funcs.items()}, tuple(map(float, interval)))


# --------------------------------------------------------------- helpers

def _combo(c1=0, c2=0, c3=0) -> list:
    """Entries of c1 e1 + c2 e2 + c3 e3 for AnalyticFn (or scalar) coefficients."""
    cs = [as_fn(c) for c in (c1, c2, c3)]
    out = [[AnalyticFn.const(0), AnalyticFn.const(0)], [AnalyticFn.const(0), AnalyticFn.const(0)]]
    for i in range(2):
        for j in range(2):
            acc = AnalyticFn.const(0)
            for k, c in enumerate(cs):
                e = complex(lm.BASIS[k, i, j])
                if e != 0 and not c.is_zero:
                    acc = acc + c * e
            out[i][j] = acc
    return out


def _zero_matrix():
    return _combo()


def _samples(interval, n=ADMISSIBILITY_SAMPLES):
    return np.linspace(interval[0], interval[1], n)


def _vanishing_samples(f: AnalyticFn, interval, tol=1e-12):
    """Sample points where f vanishes, plus the midpoints of sign changes of Re f."""
    x = _samples(interval)
    v = f(x.astype(complex))
    hits = np.abs(v) <= tol
    r = np.real(v)
    change = (r[:-1] * r[1:] < 0) & ~hits[:-1] & ~hits[1:]
    return np.sort(np.concatenate([x[hits], 0.5 * (x[:-1] + x[1:])[change]]))


# ---------------------------------------------------------- constructors

def normalized(a, b) -> Potential:
    """off-diag(a, b) lam^-1 dz."""
    a, b = as_fn(a, "z"), as_fn(b, "z")
    zero = AnalyticFn.const(0)
    return Potential({-1: [[zero, a], [b, zero]]}, "normalized", {"a": a, "b": b})


def geodesic_gcp(kappa, tau) -> Potential:
    """Curve with curvature kappa and torsion tau becomes a geodesic of the surface."""
    k, t = as_fn(kappa), as_fn(tau)
    return Potential({
        1: _combo((t - 1j) / 2, -k / 2),
        0: _zero_matrix(),
        -1: _combo((t + 1j) / 2, -k / 2),
    }, "geodesic_gcp", {"kappa": k, "tau": t})


def general_gcp(data: CauchyData) -> Potential:
    """Curve with prescribed surface normal, via normal/geodesic curvature and mu."""
    if data.variant not in ("general", "geodesic"):
        raise ValidationError(f"general_gcp needs general Cauchy data, got {data.variant}")
    kn, kg, mu = data["kappa_n"], data["kappa_g"], data["mu"]
    zeros = _vanishing_samples(kn, data.interval)
    if zeros.size:
        warnings.warn(f"kappa_n vanishes at s={zeros[0]:.6g}; the solution is singular there",
                      AdmissibilityWarning, stacklevel=2)
    return Potential({
        1: _combo((mu - 1j) / 2, -kn / 2),
        0: _combo(0, 0, kg),
        -1: _combo((mu + 1j) / 2, -kn / 2),
    }, "general_gcp", dict(data.functions))


def _dot(u, v):
    return u[0] * v[0] + u[1] * v[1] + u[2] * v[2]


def _cross(u, v):
    return (u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0])


def _d(u):
    return tuple(c.derivative() for c in u)


def gcp_data_from_curve(f0, N0, interval=(-1.0, 1.0), data_tol: float = 1e-8) -> CauchyData:
    """Normal curvature, geodesic curvature and mu of a curve with a normal field.

    ``f0`` and ``N0`` are triples of expressions.  The curve must be unit
    speed, with N0 a unit field orthogonal to it, at the sample points.
    """
    f0 = tuple(as_fn(c) for c in f0)
    N0 = tuple(as_fn(c) for c in N0)
    f1, f2, N1 = _d(f0), _d(_d(f0)), _d(N0)
    x = _samples(interval).astype(complex)
    defects = {
        "|f0'| - 1": np.abs(np.sqrt(np.real(_dot(f1, f1)(x))) - 1),
        "<f0', N0>": np.abs(_dot(f1, N0)(x)),
        "|N0| - 1": np.abs(np.sqrt(np.real(_dot(N0, N0)(x))) - 1),
    }
    for name, d in defects.items():
        if np.max(d) > data_tol:
            k = int(np.argmax(d))
            raise ValidationError(f"curve data violates {name} = 0: defect {d[k]:.3e} at s={x[k].real:.6g}",
                                  defect=float(d[k]))
    kn = _dot(f2, N0)
    kg = _dot(f2, _cross(N0, f1))
    mu = _dot(_cross(f1, N0), N1)
    return CauchyData("general", {"kappa_n": kn, "kappa_g": kg, "mu": mu}, tuple(map(float, interval)))


def singular_gcp(kappa, tau, interval=(-1.0, 1.0)) -> Potential:
    """Curve with curvature kappa, torsion tau becomes the singular set y = 0."""
    k, t = as_fn(kappa), as_fn(tau)
    x = _samples(interval).astype(complex)
    if np.all(np.abs(k(x)) <= 1e-12):
        raise ValidationError("kappa vanishes at every sample: the singular curve is degenerate everywhere")
    return Potential({
        1: _combo((t - 1j) / 2),
        0: _combo(0, 0, k),
        -1: _combo((t + 1j) / 2),
    }, "singular_gcp", {"kappa": k, "tau": t})


def singular_gcp_general(b, c, interval=(-1.0, 1.0)) -> Potential:
    """Non-degenerate singular curve with null-direction data b and normal-curve curvature c."""
    b, c = as_fn(b), as_fn(c)
    zeros = _vanishing_samples(c, interval)
    if zeros.size:
        warnings.warn(f"c vanishes at s={zeros[0]:.6g}; the singular curve is degenerate there",
                      AdmissibilityWarning, stacklevel=2)
    return Potential({
        1: _combo(0, (-1 + 1j * b) / 2),
        0: _combo(0, 0, c),
        -1: _combo(0, (-1 - 1j * b) / 2),
    }, "singular_general", {"b": b, "c": c})


def cmc_gcp(data: CauchyData) -> Potential:
    """Boundary potential of the CMC 1/2 surface through a curve with prescribed normal."""
    if data.variant not in ("cmc", "general"):
        raise ValidationError(f"cmc_gcp needs cmc Cauchy data, got {data.variant}")
    kn, kg, mu = data["kappa_n"], data["kappa_g"], data["mu"]
    return Potential({
        1: _combo(0.5 * (mu - (kn - 1) * 1j), 0.5 * (-kn - mu * 1j)),
        0: _combo(0, 0, kg),
        -1: _combo(0.5 * (mu + (kn - 1) * 1j), 0.5 * (-kn + mu * 1j)),
    }, "cmc_gcp", dict(data.functions))


def normal_curve_geodesic_curvature(N) -> AnalyticFn:
    """Geodesic curvature <N x N', N''> / |N'|^3 of a curve N(s) on the unit sphere."""
    N = tuple(as_fn(c) for c in N)
    N1 = _d(N)
    N2 = _d(N1)
    speed2 = _dot(N1, N1)
    return _dot(_cross(N, N1), N2) / speed2 ** 1.5


@dataclass(frozen=True)
class ConeReport:
    one_signed: bool
    c_min: float
    c_max: float
    closes: bool | None
    closing_defect: float | None
    period: float | None

    @property
    def embedded_precondition(self) -> bool:
        return self.one_signed and bool(self.closes)


def boundary_frame(eta: Potential, x0: float, x1: float, n: int = 2001, lam: complex = 1.0):
    """Frame along the real axis at one spectral value, F^-1 F' = eta(x, lam), F(x0) = I.

    Integrated with an adaptive high-order ODE solver; returns (x, F).
    """
    def rhs(x, y):
        F = y.view(complex).reshape(2, 2)
        A = lm.evaluate(lm.LaurentMatrix(eta.evaluate(x), eta.lo), lam)
        return (F @ A).reshape(-1).view(float)

    xs = np.linspace(x0, x1, n)
    y0 = np.eye(2, dtype=complex).reshape(-1).view(float).copy()
    sol = solve_ivp(rhs, (x0, x1), y0, t_eval=xs, method="DOP853", rtol=1e-12, atol=1e-13)
    F = sol.y.T.copy().view(complex).reshape(-1, 2, 2)
    return xs, F


def ad_e3(F: np.ndarray) -> np.ndarray:
    """Unit vector Ad_F e3 for SU(2) matrices F."""
    X = lm.mm2(lm.mm2(F, lm.E3), lm.dagger(F))
    return lm.su2_to_r3(X, tol=1e-6)


def cone_potential_from_normal_curve(c, period: float | None = None, interval=(0.0, 2 * np.pi),
                                     close_tol: float = 1e-8) -> tuple[Potential, ConeReport]:
    """Cone-point potential (b = 0) for a unit-speed normal curve of geodesic curvature c.

    The report tells whether c keeps one sign and, when ``period`` is given,
    whether the normal curve reconstructed along the singular curve closes
    after one period.
    """
    c = as_fn(c)
    x = _samples(interval).astype(complex)
    cv = np.real(c(x))
    one_signed = bool(np.all(cv > 0) or np.all(cv < 0))
    if not one_signed:
        warnings.warn("c changes sign: the normal curve is not strictly convex", AdmissibilityWarning,
                      stacklevel=2)
    pot = singular_gcp_general(0, c, interval)
    closes = defect = None
    if period is not None:
        s0 = interval[0]
        _, F = boundary_frame(pot, s0, s0 + period, n=2)
        N = ad_e3(F)
        defect = float(np.linalg.norm(N[-1] - N[0]))
        closes = defect < close_tol
    return pot, ConeReport(one_signed, float(cv.min()), float(cv.max()), closes, defect, period)


# ---------------------------------------------------------------- symmetry

@dataclass(frozen=True)
class SymmetryReport:
    ok: bool
    pattern: int | None
    order: int
    max_violation: float

    def __bool__(self):
        return self.ok


def taylor_by_quadrature(f: AnalyticFn, radius: float = 0.5, samples: int = 64) -> np.ndarray:
    """Taylor coefficients at 0 from the trapezoid rule on the circle |z| = radius."""
    th = 2 * np.pi * np.arange(samples) / samples
    z = radius * np.exp(1j * th)
    try:
        v = f(z)
    except EvaluationError as exc:
        raise EvaluationError(f"Taylor quadrature failed: {exc}") from exc
    c = np.fft.fft(v) / samples
    return c / radius ** np.arange(samples)


def check_symmetry_order(a, b, n: int, radius: float = 0.5, samples: int = 64,
                         taylor_tol: float = 1e-10) -> SymmetryReport:
    """Does (a, b) have the Taylor pattern of an order-n rotationally symmetric surface?

    Pattern 1: a has only powers n*j, b only powers n*j - 2.
    Pattern 2: the same with a and b exchanged.
    """
    if n < 2:
        raise ValidationError("symmetry order must be at least 2")
    a, b = as_fn(a, "z"), as_fn(b, "z")
    kmax = samples // 2
    k = np.arange(kmax)
    # coefficients scaled back to the quadrature circle, where aliasing error is uniform
    ca = np.abs(taylor_by_quadrature(a, radius, samples)[:kmax]) * radius ** k
    cb = np.abs(taylor_by_quadrature(b, radius, samples)[:kmax]) * radius ** k
    scale = max(ca.max(), cb.max(), 1e-300)
    mult = k % n == 0
    shifted = (k % n) == (n - 2) % n
    v1 = max(ca[~mult].max(initial=0), cb[~shifted].max(initial=0)) / scale
    v2 = max(ca[~shifted].max(initial=0), cb[~mult].max(initial=0)) / scale
    if v1 <= taylor_tol:
        return SymmetryReport(True, 1, n, v1)
    if v2 <= taylor_tol:
        return SymmetryReport(True, 2, n, v2)
    return SymmetryReport(False, None, n, min(v1, v2))


KINDS = {
    "normalized": ("a", "b"),
    "geodesic_gcp": ("kappa", "tau"),
    "general_gcp": ("kappa_n", "kappa_g", "mu"),
    "singular_gcp": ("kappa", "tau"),
    "singular_general": ("b", "c"),
    "cmc_gcp": ("kappa_n", "kappa_g", "mu"),
    "cone": ("c",),
}
