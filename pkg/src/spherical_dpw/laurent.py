"""Truncated 2x2 matrix Laurent polynomials in the loop parameter lambda.

A loop is stored as a coefficient array of shape ``(..., n, 2, 2)`` holding
the coefficients for exponents ``lo, lo + 1, ..., lo + n - 1``.  Leading axes
are batch axes, so a whole grid of loops is a single ``LaurentMatrix`` and
every operation here broadcasts over them.

Also holds the su(2) basis used throughout the package,

    e1 = 1/2 [[0, -i], [-i, 0]],  e2 = 1/2 [[0, 1], [-1, 0]],  e3 = 1/2 diag(i, -i),

orthonormal for <X, Y> = -2 tr(XY), which identifies su(2) with R^3 so that
the commutator is the cross product.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import EvaluationError, ValidationError

DEFAULT_N_TRUNC = 16
DEFAULT_TAIL_TOL = 1e-10
DEFAULT_TWIST_TOL = 1e-12

E1 = 0.5 * np.array([[0, -1j], [-1j, 0]])
E2 = 0.5 * np.array([[0, 1], [-1, 0]], dtype=complex)
E3 = 0.5 * np.array([[1j, 0], [0, -1j]])
BASIS = np.stack([E1, E2, E3])

for _a in (E1, E2, E3, BASIS):
    _a.flags.writeable = False


class TruncationWarning(UserWarning):
    """Discarded Laurent tail is large relative to the retained part."""


@dataclass(frozen=True, eq=False)
class LaurentMatrix:
    """Loop ``sum_n coeffs[n - lo] * lam**n`` with 2x2 complex coefficients.

    ``tail`` is the Frobenius mass discarded by truncation when this value was
    produced (maximum over batch entries).
    """

    coeffs: np.ndarray
    lo: int = 0
    twisted: bool = False
    tail: float = 0.0
    _validated: bool = field(default=False, repr=False)

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.ndim < 3 or c.shape[-2:] != (2, 2):
            raise ValidationError(f"coefficient array must have shape (..., n, 2, 2), got {c.shape}")
        if c.shape[-3] == 0:
            raise ValidationError("a loop needs at least one coefficient")
        c = c.copy()
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "lo", int(self.lo))
        if self.twisted and not self._validated:
            ok, report = check_twisted(self)
            if not ok:
                raise ValidationError(
                    f"loop flagged twisted violates the parity pattern at exponent {report['worst_exponent']}",
                    defect=report["defect"],
                )

    @property
    def hi(self) -> int:
        return self.lo + self.coeffs.shape[-3] - 1

    @property
    def batch_shape(self) -> tuple:
        return self.coeffs.shape[:-3]

    def exponents(self) -> range:
        return range(self.lo, self.hi + 1)

    def coeff(self, n: int) -> np.ndarray:
        """Coefficient of lam**n (zero outside the stored range)."""
        if self.lo <= n <= self.hi:
            return self.coeffs[..., n - self.lo, :, :]
        return np.zeros(self.batch_shape + (2, 2), dtype=complex)

    def __getitem__(self, idx) -> "LaurentMatrix":
        """Index the batch axes."""
        if not isinstance(idx, tuple):
            idx = (idx,)
        c = self.coeffs[idx + (Ellipsis,)]
        return _trusted(c, self.lo, self.twisted, self.tail)

    # arithmetic sugar; truncation uses the package default
    def __matmul__(self, other):
        return multiply(self, other)

    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return add(self, scale(other, -1.0))

    @classmethod
    def from_terms(cls, terms: dict, twisted: bool = False) -> "LaurentMatrix":
        """Build from ``{exponent: 2x2 matrix}``."""
        if not terms:
            return zero()
        lo, hi = min(terms), max(terms)
        c = np.zeros((hi - lo + 1, 2, 2), dtype=complex)
        for n, m in terms.items():
            c[n - lo] = np.asarray(m, dtype=complex)
        return cls(c, lo, twisted=twisted)


def _trusted(coeffs, lo, twisted, tail=0.0):
    return LaurentMatrix(coeffs, lo, twisted=twisted, tail=tail, _validated=True)


def identity(batch_shape=()) -> LaurentMatrix:
    c = np.broadcast_to(np.eye(2, dtype=complex), tuple(batch_shape) + (1, 2, 2))
    return _trusted(c, 0, True)


def zero(batch_shape=()) -> LaurentMatrix:
    return _trusted(np.zeros(tuple(batch_shape) + (1, 2, 2), dtype=complex), 0, True)


def constant(m, twisted=None) -> LaurentMatrix:
    m = np.asarray(m, dtype=complex)
    L = LaurentMatrix(m[..., None, :, :], 0)
    if twisted is None:
        twisted = check_twisted(L)[0]
    return LaurentMatrix(m[..., None, :, :], 0, twisted=twisted)


def evaluate(L: LaurentMatrix, lam) -> np.ndarray:
    """Value of the loop at ``lam``.

    ``lam`` may be a scalar (result shape ``batch + (2, 2)``) or a 1-d array of
    spectral values (result shape ``batch + (k, 2, 2)``).
    """
    lam_arr = np.asarray(lam, dtype=complex)
    if np.any(lam_arr == 0):
        raise EvaluationError("loop evaluated at lambda = 0")
    n = np.arange(L.lo, L.hi + 1)
    scalar = lam_arr.ndim == 0
    w = lam_arr.reshape(-1)[None, :] ** n[:, None]              # (n, k)
    c = np.swapaxes(L.coeffs.reshape(L.batch_shape + (-1, 4)), -1, -2)  # (..., 4, n)
    v = np.swapaxes(c @ w, -1, -2)                               # (..., k, 4)
    v = v.reshape(L.batch_shape + (-1, 2, 2))
    return v[..., 0, :, :] if scalar else v


def _truncate(c, lo, n_trunc):
    """Cut coefficient array to exponents within [-n_trunc, n_trunc]."""
    hi = lo + c.shape[-3] - 1
    new_lo, new_hi = max(lo, -n_trunc), min(hi, n_trunc)
    if new_lo > new_hi:
        # nothing survives; keep a single zero constant term
        tail = np.sqrt(np.sum(np.abs(c) ** 2, axis=(-3, -2, -1)))
        out = np.zeros(c.shape[:-3] + (1, 2, 2), dtype=complex)
        return out, 0, tail, np.zeros_like(tail)
    kept = c[..., new_lo - lo:new_hi - lo + 1, :, :]
    dropped = np.sum(np.abs(c) ** 2, axis=(-3, -2, -1)) - np.sum(np.abs(kept) ** 2, axis=(-3, -2, -1))
    tail = np.sqrt(np.maximum(dropped, 0.0))
    retained = np.sqrt(np.sum(np.abs(kept) ** 2, axis=(-3, -2, -1)))
    return kept, new_lo, tail, retained


def _finish(c, lo, twisted, n_trunc, tail_tol, what):
    kept, new_lo, tail, retained = _truncate(c, lo, n_trunc)
    tail_max = float(np.max(tail)) if np.size(tail) else 0.0
    if np.any(tail > tail_tol * np.maximum(retained, 1e-300)):
        warnings.warn(
            f"{what}: discarded Laurent tail {tail_max:.3e} exceeds {tail_tol:g} of retained mass "
            f"(N_trunc={n_trunc})",
            TruncationWarning,
            stacklevel=3,
        )
    return _trusted(kept, new_lo, twisted, tail_max)


def mm2(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Broadcast product of stacks of 2x2 matrices (faster than matmul at this size)."""
    a00, a01, a10, a11 = a[..., 0, 0], a[..., 0, 1], a[..., 1, 0], a[..., 1, 1]
    b00, b01, b10, b11 = b[..., 0, 0], b[..., 0, 1], b[..., 1, 0], b[..., 1, 1]
    out = np.empty(np.broadcast_shapes(a.shape, b.shape), dtype=complex)
    out[..., 0, 0] = a00 * b00 + a01 * b10
    out[..., 0, 1] = a00 * b01 + a01 * b11
    out[..., 1, 0] = a10 * b00 + a11 * b10
    out[..., 1, 1] = a10 * b01 + a11 * b11
    return out


def det2(m: np.ndarray) -> np.ndarray:
    return m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0]


def norm2(m: np.ndarray) -> np.ndarray:
    """Spectral norm of stacks of 2x2 matrices, in closed form."""
    fro2 = np.sum(np.abs(m) ** 2, axis=(-2, -1))
    d = np.abs(det2(m)) ** 2
    return np.sqrt(0.5 * (fro2 + np.sqrt(np.maximum(fro2 ** 2 - 4 * d, 0.0))))


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(m, -1, -2))


def convolve(a: np.ndarray, a_lo: int, b: np.ndarray, b_lo: int) -> tuple[np.ndarray, int]:
    """Untruncated coefficient convolution of two broadcastable coefficient arrays."""
    na, nb = a.shape[-3], b.shape[-3]
    batch = np.broadcast_shapes(a.shape[:-3], b.shape[:-3])
    out = np.zeros(batch + (na + nb - 1, 2, 2), dtype=complex)
    if na <= nb:
        for i in range(na):
            out[..., i:i + nb, :, :] += mm2(a[..., i:i + 1, :, :], b)
    else:
        for j in range(nb):
            out[..., j:j + na, :, :] += mm2(a, b[..., j:j + 1, :, :])
    return out, a_lo + b_lo


def multiply(A: LaurentMatrix, B: LaurentMatrix, n_trunc: int = DEFAULT_N_TRUNC,
             tail_tol: float = DEFAULT_TAIL_TOL) -> LaurentMatrix:
    """Loop product ``A B``, hard-truncated to exponents in [-n_trunc, n_trunc]."""
    c, lo = convolve(A.coeffs, A.lo, B.coeffs, B.lo)
    return _finish(c, lo, A.twisted and B.twisted, n_trunc, tail_tol, "multiply")


def add(A: LaurentMatrix, B: LaurentMatrix) -> LaurentMatrix:
    lo, hi = min(A.lo, B.lo), max(A.hi, B.hi)
    batch = np.broadcast_shapes(A.batch_shape, B.batch_shape)
    c = np.zeros(batch + (hi - lo + 1, 2, 2), dtype=complex)
    c[..., A.lo - lo:A.hi - lo + 1, :, :] += A.coeffs
    c[..., B.lo - lo:B.hi - lo + 1, :, :] += B.coeffs
    return _trusted(c, lo, A.twisted and B.twisted, max(A.tail, B.tail))


def scale(A: LaurentMatrix, s) -> LaurentMatrix:
    return _trusted(A.coeffs * s, A.lo, A.twisted, A.tail)


def circle_adjoint(A: LaurentMatrix) -> LaurentMatrix:
    """Loop whose value on |lam| = 1 is the conjugate transpose of A's value.

    The coefficient of lam**n is the conjugate transpose of A's coefficient of
    lam**-n; applying it twice returns A exactly.
    """
    c = np.conj(np.swapaxes(A.coeffs[..., ::-1, :, :], -1, -2))
    return _trusted(c, -A.hi, A.twisted, A.tail)


def lambda_derivative(A: LaurentMatrix) -> LaurentMatrix:
    """``lam * dA/dlam``: the coefficient of lam**n is multiplied by n."""
    n = np.arange(A.lo, A.hi + 1, dtype=float)
    return _trusted(A.coeffs * n[:, None, None], A.lo, A.twisted, A.tail)


def check_twisted(A: LaurentMatrix, tol: float = DEFAULT_TWIST_TOL) -> tuple[bool, dict]:
    """Check that even powers are diagonal and odd powers off-diagonal.

    Returns ``(ok, report)``; ``report`` has the largest off-pattern entry
    (``defect``) and the exponent where it occurs.
    """
    c = A.coeffs
    worst, worst_n = 0.0, None
    for k, n in enumerate(A.exponents()):
        m = c[..., k, :, :]
        if n % 2 == 0:
            bad = np.maximum(np.abs(m[..., 0, 1]), np.abs(m[..., 1, 0]))
        else:
            bad = np.maximum(np.abs(m[..., 0, 0]), np.abs(m[..., 1, 1]))
        b = float(np.max(bad)) if np.size(bad) else 0.0
        if b > worst:
            worst, worst_n = b, n
    return worst <= tol, {"defect": worst, "worst_exponent": worst_n, "tol": tol}


def circle_samples(m: int) -> np.ndarray:
    """``m`` equispaced points on the unit circle, starting at 1."""
    return np.exp(2j * np.pi * np.arange(m) / m)


def circle_max_norm(A: LaurentMatrix, m: int | None = None) -> np.ndarray:
    """Sup over circle samples of the spectral norm of A (per batch entry)."""
    if m is None:
        m = 4 * max(abs(A.lo), abs(A.hi), 4)
    vals = evaluate(A, circle_samples(m))
    return np.max(norm2(vals), axis=-1)


def r3_to_su2(v) -> np.ndarray:
    """Embed R^3 into su(2): (x1, x2, x3) -> x1 e1 + x2 e2 + x3 e3."""
    v = np.asarray(v, dtype=float)
    return np.einsum("...k,kij->...ij", v, BASIS)


def su2_to_r3(X, tol: float = 1e-10) -> np.ndarray:
    """Coordinates x_k = <X, e_k> = -2 tr(X e_k) of a traceless anti-Hermitian X.

    Raises ``ValidationError`` carrying the defect norm when X is not in su(2)
    within ``tol`` (relative to max(1, |X|)).
    """
    X = np.asarray(X, dtype=complex)
    defect = su2_defect(X)
    scale_ = np.maximum(1.0, np.linalg.norm(X, axis=(-2, -1)))
    d = float(np.max(defect / scale_)) if np.size(defect) else 0.0
    if d > tol:
        raise ValidationError(f"matrix is not in su(2): defect {d:.3e} > {tol:g}", defect=d)
    return -2.0 * np.real(np.einsum("...ij,kji->...k", X, BASIS))


def su2_defect(X) -> np.ndarray:
    """Frobenius size of the part of X violating tracelessness or anti-hermiticity."""
    X = np.asarray(X, dtype=complex)
    herm = X + np.conj(np.swapaxes(X, -1, -2))
    tr = X[..., 0, 0] + X[..., 1, 1]
    return np.sqrt(np.linalg.norm(herm, axis=(-2, -1)) ** 2 / 4 + np.abs(tr) ** 2)


def su2_inner(X, Y) -> np.ndarray:
    """<X, Y> = -2 tr(XY)."""
    return -2.0 * np.real(np.einsum("...ij,...ji->...", X, Y))
