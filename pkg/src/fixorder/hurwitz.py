"""Routh-Hurwitz stability test through leading principal minors."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .poly import Poly

REAL_TOL = 1e-12
MINOR_TOL = 1e-10


@dataclass(frozen=True)
class HurwitzReport:
    matrix: np.ndarray
    minors: np.ndarray
    stable: bool

    def to_json(self) -> dict:
        return {
            "matrix": self.matrix.tolist(),
            "minors": self.minors.tolist(),
            "stable": self.stable,
        }


def _real_coeffs(p: Poly) -> np.ndarray:
    if p.is_zero:
        raise DomainError("zero polynomial has no Hurwitz matrix")
    if not p.is_real(REAL_TOL):
        raise DomainError("Hurwitz test needs real coefficients")
    c = p.real_coeffs
    nz = np.flatnonzero(c)
    c = c[: nz[-1] + 1]
    if c.size < 2:
        raise DomainError("Hurwitz test needs degree >= 1")
    # sign flip is exact; no rescaling so exact zeros stay exact
    return -c if c[-1] < 0 else c


def hurwitz_matrix(p: Poly) -> np.ndarray:
    """Hurwitz matrix in the orientation whose first row is ``[a1, a0, 0, ...]``.

    With ``a_k`` the coefficient of ``s**(n-k)``, entry ``(i, j)`` (1-based) is
    ``a_{2i-j}``, i.e. the coefficient of ``s**(n - 2i + j)``. This is the
    transpose of the other common arrangement; leading principal minors are the
    same in both.
    """
    c = _real_coeffs(p)
    n = c.size - 1
    H = np.zeros((n, n))
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            k = n - 2 * i + j
            if 0 <= k <= n:
                H[i - 1, j - 1] = c[k]
    return H


def bareiss_det(M: np.ndarray) -> np.ndarray:
    """Fraction-free Gaussian elimination, batched over leading axes.

    Rows are swapped only when a pivot is exactly zero, so exact cancellations
    in the input survive as exact zeros in the determinant.
    """
    A = np.array(M, dtype=float)
    batch_shape = A.shape[:-2]
    n = A.shape[-1]
    A = A.reshape((-1, n, n))
    B = A.shape[0]
    if n == 0:
        return np.ones(batch_shape)
    sign = np.ones(B)
    prev = np.ones(B)
    dead = np.zeros(B, dtype=bool)
    rows = np.arange(B)
    for k in range(n - 1):
        zero = A[:, k, k] == 0.0
        if zero.any():
            below = A[:, k + 1 :, k] != 0.0
            has = below.any(axis=1)
            swap = zero & has
            dead |= zero & ~has
            if swap.any():
                idx = rows[swap]
                tgt = np.argmax(below[swap], axis=1) + k + 1
                tmp = A[idx, k].copy()
                A[idx, k] = A[idx, tgt]
                A[idx, tgt] = tmp
                sign[swap] = -sign[swap]
        piv = np.where(dead, 1.0, A[:, k, k])
        sub = A[:, k + 1 :, k + 1 :]
        with np.errstate(invalid="ignore", divide="ignore"):
            A[:, k + 1 :, k + 1 :] = (
                sub * piv[:, None, None]
                - A[:, k + 1 :, k : k + 1] * A[:, k : k + 1, k + 1 :]
            ) / prev[:, None, None]
        prev = piv
    det = np.where(dead, 0.0, sign * A[:, n - 1, n - 1])
    return det.reshape(batch_shape)


def leading_minors(H: np.ndarray) -> np.ndarray:
    """Leading principal minors; works on (n, n) or batched (..., n, n) input."""
    n = H.shape[-1]
    return np.stack([bareiss_det(H[..., :k, :k]) for k in range(1, n + 1)], axis=-1)


def _verdict(H: np.ndarray, minors: np.ndarray) -> np.ndarray:
    n = H.shape[-1]
    ok = np.ones(minors.shape[:-1], dtype=bool)
    for k in range(1, n + 1):
        scale = np.prod(np.linalg.norm(H[..., :k, :k], axis=-1), axis=-1)
        ok &= minors[..., k - 1] > MINOR_TOL * scale
    return ok


def is_hurwitz_stable(p: Poly) -> HurwitzReport:
    H = hurwitz_matrix(p)
    minors = leading_minors(H)
    return HurwitzReport(H, minors, bool(_verdict(H, minors)))


def hurwitz_matrices_batch(coeff_rows) -> np.ndarray:
    """Hurwitz matrices for rows of real ascending coefficients with positive lead."""
    c = np.asarray(coeff_rows, dtype=float)
    B, n1 = c.shape
    n = n1 - 1
    H = np.zeros((B, n, n))
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            k = n - 2 * i + j
            if 0 <= k <= n:
                H[:, i - 1, j - 1] = c[:, k]
    return H


def stability_batch(coeff_rows) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized ``(minors, stable)`` for many same-degree real polynomials."""
    H = hurwitz_matrices_batch(coeff_rows)
    minors = leading_minors(H)
    return minors, _verdict(H, minors)
