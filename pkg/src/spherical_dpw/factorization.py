"""Iwasawa splitting of twisted SL(2, C) loops, Phi = F B_plus.

F is unitary on the unit circle; B_plus extends holomorphically into the
disc with constant term diag(rho, 1/rho), rho > 0.

Method: P = Phi* Phi equals B_plus* B_plus on the circle, so the block
Toeplitz operator of P factors as T(P) = T(B_plus)^H T(B_plus) with
T(B_plus) block lower triangular.  Its inverse therefore has first block
column

    T(P)^-1 E_0 = T(C) E_0 B_0^-H,    C = B_plus^-1,

so solving the finite section T_M(P) X = E_0 (a Cholesky factorization of
a Hermitian positive definite matrix) gives C directly, already in the
normalization where B_0 has a positive diagonal.  For twisted loops the
system splits into two decoupled scalar systems by exponent parity.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.linalg import lapack

from . import laurent as lm
from .errors import FactorizationError, ValidationError
from .laurent import LaurentMatrix

ITERATIONS_CHUNK = 512


@dataclass(frozen=True)
class Tolerances:
    iwasawa_tol: float = 1e-8
    det_tol: float = 1e-10
    cond_floor: float = 1e-10


@dataclass(frozen=True, eq=False)
class IwasawaResult:
    """Factors of Phi = F B_plus.

    For batched input, ``residual``, ``rho`` and ``ok`` are arrays over the
    batch axes; otherwise floats / bool.
    """

    unitary_part: LaurentMatrix
    plus_part: LaurentMatrix
    residual: np.ndarray | float
    rho: np.ndarray | float
    ok: np.ndarray | bool


def _padded(c: np.ndarray, lo: int, m: int) -> np.ndarray:
    """Coefficient array re-indexed to exponents -(m-1)..(m-1)."""
    hi = lo + c.shape[-3] - 1
    out = np.zeros(c.shape[:-3] + (2 * m - 1, 2, 2), dtype=complex)
    a, b = max(lo, -(m - 1)), min(hi, m - 1)
    if a <= b:
        out[..., a + m - 1:b + m, :, :] = c[..., a - lo:b - lo + 1, :, :]
    return out


def _toeplitz_indices(m: int):
    i = np.arange(m)[:, None]
    j = np.arange(m)[None, :]
    return i - j + m - 1, i, j


def _lower_solve(L: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Forward substitution ``L x = rhs`` over a batch of lower triangular matrices."""
    m = L.shape[-1]
    x = np.zeros(rhs.shape, dtype=complex)
    for k in range(m):
        acc = rhs[..., k] - np.sum(L[..., k, :k] * x[..., :k], axis=-1)
        x[..., k] = acc / L[..., k, k]
    return x


def _first_column_of_inverse(T: np.ndarray) -> np.ndarray:
    """``T^-1 e_0`` for a batch of Hermitian positive definite matrices.

    Uses the Cholesky factor of the index-reversed matrix, T = U U^H with U
    upper triangular, so ``U^-1 e_0`` is trivial and one triangular solve
    with ``U^H`` remains.
    """
    Tr = T[..., ::-1, ::-1]
    try:
        Lr = np.linalg.cholesky(Tr)
    except np.linalg.LinAlgError:
        _raise_not_pd(Tr)
    U = Lr[..., ::-1, ::-1]
    UH = np.conj(np.swapaxes(U, -1, -2))
    rhs = np.zeros(T.shape[:-1], dtype=complex)
    rhs[..., 0] = 1.0 / U[..., 0, 0]
    return _lower_solve(UH, rhs)


def _raise_not_pd(Tr: np.ndarray):
    flat = Tr.reshape((-1,) + Tr.shape[-2:])
    for idx, a in enumerate(flat):
        _, info = lapack.zpotrf(a, lower=1)
        if info > 0:
            point = np.unravel_index(idx, Tr.shape[:-2]) if Tr.ndim > 2 else ()
            raise FactorizationError(
                f"finite-section Cholesky lost positive definiteness at section index {info - 1}"
                + (f" (batch point {tuple(int(p) for p in point)})" if point else ""),
                section=int(info - 1),
            )
    raise FactorizationError("finite-section Cholesky failed")


def _twisted_inverse_factor(p: np.ndarray, p_lo: int, m: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Coefficients C_0..C_{m-1} of B_plus^-1 for a twisted positive symbol P.

    Returns ``(C, rho, rho_b)`` where ``diag(rho, rho_b)`` is the constant
    term of B_plus (so rho * rho_b = 1 up to rounding).
    """
    pf = _padded(p, p_lo, m)
    d, i, j = _toeplitz_indices(m)
    ia, ja = i % 2, j % 2
    ib, jb = (i + 1) % 2, (j + 1) % 2
    TA = pf[..., d, ia, ja]
    TB = pf[..., d, ib, jb]
    xa = _first_column_of_inverse(TA)
    xb = _first_column_of_inverse(TB)
    rho = 1.0 / np.sqrt(np.real(xa[..., 0]))
    rho_b = 1.0 / np.sqrt(np.real(xb[..., 0]))
    C = np.zeros(p.shape[:-3] + (m, 2, 2), dtype=complex)
    k = np.arange(m)
    C[..., k, k % 2, 0] = xa * rho[..., None]
    C[..., k, (k + 1) % 2, 1] = xb * rho_b[..., None]
    return C, rho, rho_b


def _general_inverse_factor(p: np.ndarray, p_lo: int, m: int) -> np.ndarray:
    """Coefficients of B_plus^-1 for a general (not necessarily twisted) P.

    The constant term of B_plus is upper triangular with positive diagonal.
    """
    pf = _padded(p, p_lo, m)
    d, i, j = _toeplitz_indices(m)
    # interleave (block index, component) into one index 2*i + a
    big = pf[..., d, :, :]                     # (..., m, m, 2, 2)
    big = np.swapaxes(big, -3, -2)             # (..., m, 2, m, 2)
    T = big.reshape(big.shape[:-4] + (2 * m, 2 * m))
    cols = []
    for a in range(2):
        # solve for the a-th column of E_0 by reordering so it comes first
        perm = np.r_[a, np.delete(np.arange(2 * m), a)]
        x = _first_column_of_inverse(T[..., perm[:, None], perm[None, :]])
        inv = np.empty_like(x)
        inv[..., perm] = x
        cols.append(inv)
    X = np.stack(cols, axis=-1).reshape(p.shape[:-3] + (m, 2, 2))
    X0 = X[..., 0, :, :]
    # X0 = (B0^H B0)^-1  ->  B0 = upper Cholesky factor of X0^-1
    G = np.linalg.inv(X0)
    G = 0.5 * (G + np.conj(np.swapaxes(G, -1, -2)))
    B0 = np.conj(np.swapaxes(np.linalg.cholesky(G), -1, -2))
    return X @ np.conj(np.swapaxes(B0, -1, -2))[..., None, :, :]


def series_inverse(C: np.ndarray, n_terms: int) -> np.ndarray:
    """First ``n_terms`` coefficients of the inverse of a power series in lam.

    Triangular back-substitution B_0 = C_0^-1, B_n = -C_0^-1 sum_k C_k B_{n-k}.
    """
    B = np.zeros(C.shape[:-3] + (n_terms, 2, 2), dtype=complex)
    C0inv = np.linalg.inv(C[..., 0, :, :])
    B[..., 0, :, :] = C0inv
    for n in range(1, n_terms):
        kmax = min(n, C.shape[-3] - 1)
        acc = np.zeros(C.shape[:-3] + (2, 2), dtype=complex)
        for k in range(1, kmax + 1):
            acc += lm.mm2(C[..., k, :, :], B[..., n - k, :, :])
        B[..., n, :, :] = -lm.mm2(C0inv, acc)
    return B


def spectral_factor_positive(P: LaurentMatrix, n_trunc: int = lm.DEFAULT_N_TRUNC,
                             tol: Tolerances = Tolerances(), section: int | None = None) -> LaurentMatrix:
    """Factor a circle-positive Hermitian loop as P = B_plus* B_plus.

    B_plus has exponents 0..n_trunc and a constant term that is upper
    triangular with positive real diagonal.
    """
    m = section or 4 * n_trunc
    herm = lm.add(P, lm.scale(lm.circle_adjoint(P), -1.0))
    defect = float(np.max(np.abs(herm.coeffs)))
    if defect > tol.iwasawa_tol * max(1.0, float(np.max(np.abs(P.coeffs)))):
        raise ValidationError(f"symbol is not Hermitian on the circle (defect {defect:.3e})", defect=defect)
    vals = lm.evaluate(P, lm.circle_samples(m))
    eig = np.linalg.eigvalsh(0.5 * (vals + np.conj(np.swapaxes(vals, -1, -2))))
    lam_min = float(np.min(eig))
    if lam_min <= tol.cond_floor:
        raise FactorizationError(
            f"symbol is not positive definite on the circle (min eigenvalue {lam_min:.3e})",
            conditioning=lam_min)
    if P.twisted:
        C, _, _ = _twisted_inverse_factor(P.coeffs, P.lo, m)
    else:
        C = _general_inverse_factor(P.coeffs, P.lo, m)
    B = series_inverse(C, n_trunc + 1)
    return lm.LaurentMatrix(B, 0, twisted=P.twisted, _validated=True)


def _iwasawa_chunk(phi: np.ndarray, lo: int, n_trunc: int, m: int):
    """Factor a chunk of twisted loops given as a raw coefficient array."""
    phistar = np.conj(np.swapaxes(phi[..., ::-1, :, :], -1, -2))
    hi = lo + phi.shape[-3] - 1
    p, p_lo = lm.convolve(phistar, -hi, phi, lo)
    C, rho, rho_b = _twisted_inverse_factor(p, p_lo, m)
    # F = Phi C needs C_k only for k <= n_trunc - lo
    kmax = min(m, n_trunc - lo + 1)
    f, f_lo = lm.convolve(phi, lo, C[..., :kmax, :, :], 0)
    f_hi = f_lo + f.shape[-3] - 1
    a, b = max(f_lo, -n_trunc), min(f_hi, n_trunc)
    f = f[..., a - f_lo:b - f_lo + 1, :, :]
    B = series_inverse(C, n_trunc + 1)

    lam = lm.circle_samples(m)
    Fv = lm.evaluate(lm._trusted(f, a, True), lam)
    Bv = lm.evaluate(lm._trusted(B, 0, True), lam)
    Pv = lm.evaluate(lm._trusted(phi, lo, True), lam)
    eye = np.eye(2)
    recon = np.max(np.linalg.norm(lm.mm2(Fv, Bv) - Pv, axis=(-2, -1)), axis=-1)
    unit = np.max(np.linalg.norm(lm.mm2(Fv, lm.dagger(Fv)) - eye, axis=(-2, -1)), axis=-1)
    dets = np.maximum(np.max(np.abs(lm.det2(Fv) - 1), axis=-1), np.max(np.abs(lm.det2(Bv) - 1), axis=-1))
    residual = np.maximum(np.maximum(recon, unit), dets)
    residual = np.maximum(residual, np.abs(rho * rho_b - 1))
    return f, a, B, residual, rho


def iwasawa(Phi: LaurentMatrix, n_trunc: int = lm.DEFAULT_N_TRUNC, tol: Tolerances = Tolerances(),
            section: int | None = None, strict: bool = True, workers: int = 1) -> IwasawaResult:
    """Iwasawa factorization of a (batch of) twisted loop(s).

    With ``strict`` a residual above ``tol.iwasawa_tol`` raises
    ``FactorizationError``; otherwise failing batch points are reported via
    ``ok``.  ``workers > 1`` factors batch chunks on a thread pool.
    """
    ok_tw, report = lm.check_twisted(Phi)
    if not ok_tw:
        raise ValidationError(
            f"loop is not twisted (defect {report['defect']:.3e} at exponent {report['worst_exponent']})",
            defect=report["defect"])
    m = section or 4 * n_trunc
    lam = lm.circle_samples(m)
    vals = lm.evaluate(Phi, lam)
    det_err = np.max(np.abs(lm.det2(vals) - 1.0), axis=-1)
    if np.any(det_err > tol.det_tol):
        raise ValidationError(f"det Phi != 1 on the circle (defect {float(np.max(det_err)):.3e})",
                              defect=float(np.max(det_err)))
    smax = np.max(lm.norm2(vals), axis=-1)
    # det = 1 so the smallest eigenvalue of Phi* Phi is 1 / smax**2
    lam_min = 1.0 / smax ** 2
    if strict and np.any(lam_min < tol.cond_floor):
        raise FactorizationError(
            f"ill-conditioned loop: smallest eigenvalue of Phi*Phi on the circle is {float(np.min(lam_min)):.3e}",
            conditioning=float(np.min(lam_min)))

    batch = Phi.batch_shape
    flat = Phi.coeffs.reshape((-1,) + Phi.coeffs.shape[-3:])
    chunks = [slice(s, s + ITERATIONS_CHUNK) for s in range(0, flat.shape[0], ITERATIONS_CHUNK)]

    def work(sl):
        return _iwasawa_chunk(flat[sl], Phi.lo, n_trunc, m)

    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(work, chunks))
    else:
        parts = [work(sl) for sl in chunks]

    f_lo = parts[0][1]
    f = np.concatenate([p[0] for p in parts]).reshape(batch + parts[0][0].shape[-3:])
    B = np.concatenate([p[2] for p in parts]).reshape(batch + parts[0][2].shape[-3:])
    residual = np.concatenate([p[3] for p in parts]).reshape(batch)
    rho = np.concatenate([p[4] for p in parts]).reshape(batch)
    ok = (residual <= tol.iwasawa_tol) & (lam_min >= tol.cond_floor)
    if strict and not np.all(ok):
        raise FactorizationError(
            f"Iwasawa residual {float(np.max(residual)):.3e} exceeds tolerance {tol.iwasawa_tol:g}")
    F = lm._trusted(f, f_lo, True)
    Bp = lm._trusted(B, 0, True)
    if not batch:
        return IwasawaResult(F, Bp, float(residual), float(rho), bool(ok))
    return IwasawaResult(F, Bp, residual, rho, ok)
