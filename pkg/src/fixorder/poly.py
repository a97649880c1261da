"""Dense complex polynomials, Aberth-Ehrlich root finding and the abscissa.

Coefficients are stored in ascending order: ``coeffs[j]`` multiplies ``s**j``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb

import numpy as np

from .errors import ConvergenceError, DomainError

__all__ = [
    "Poly",
    "RootSet",
    "eval_and_derivative",
    "roots",
    "roots_batch",
    "abscissa",
    "abscissa_batch",
    "shift",
]

EPS = np.finfo(float).eps
MAX_ITER = 500
STEP_TOL = 1e-12
ROOT_RESIDUAL_TOL = 1e-10


def _parse_number(value) -> complex:
    if isinstance(value, str):
        text = value.strip().replace(" ", "")
        try:
            return complex(float(Fraction(text)))
        except ValueError:
            return complex(text.replace("i", "j"))
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise DomainError(f"coefficient pair must be [re, im], got {value!r}")
        return complex(_parse_number(value[0]).real, _parse_number(value[1]).real)
    return complex(value)


class Poly:
    """Immutable polynomial with complex coefficients.

    Trailing (highest-degree) exact zeros are stripped on construction, so the
    zero polynomial has an empty coefficient array and degree -1.
    """

    __slots__ = ("_c",)

    def __init__(self, coeffs=()):
        c = np.array([_parse_number(v) for v in coeffs], dtype=complex) if not isinstance(
            coeffs, np.ndarray
        ) else np.array(coeffs, dtype=complex)
        c = np.atleast_1d(c).ravel()
        nz = np.flatnonzero(c)
        c = c[: nz[-1] + 1].copy() if nz.size else c[:0].copy()
        c.setflags(write=False)
        object.__setattr__(self, "_c", c)

    def __setattr__(self, name, value):
        raise AttributeError("Poly is immutable")

    @classmethod
    def from_roots(cls, zs, lead=1.0) -> Poly:
        c = np.array([lead], dtype=complex)
        for z in np.atleast_1d(zs):
            c = np.convolve(c, [-z, 1.0])
        return cls(c)

    @classmethod
    def monomial(cls, n: int, coeff=1.0) -> Poly:
        c = np.zeros(n + 1, dtype=complex)
        c[n] = coeff
        return cls(c)

    @property
    def coeffs(self) -> np.ndarray:
        return self._c

    @property
    def degree(self) -> int:
        return self._c.size - 1

    @property
    def lead(self) -> complex:
        if self.is_zero:
            raise DomainError("zero polynomial has no leading coefficient")
        return complex(self._c[-1])

    @property
    def is_zero(self) -> bool:
        return self._c.size == 0

    def is_real(self, tol: float = 0.0) -> bool:
        scale = max(1.0, float(np.max(np.abs(self._c)))) if self._c.size else 1.0
        return bool(np.all(np.abs(self._c.imag) <= tol * scale))

    @property
    def real_coeffs(self) -> np.ndarray:
        return self._c.real.copy()

    def padded(self, length: int) -> np.ndarray:
        """Coefficients zero-padded (never truncated) to ``length``."""
        if length < self._c.size:
            raise DomainError(f"cannot pad degree {self.degree} polynomial to length {length}")
        out = np.zeros(length, dtype=complex)
        out[: self._c.size] = self._c
        return out

    def monic(self) -> Poly:
        return Poly(self._c / self.lead)

    def derivative(self) -> Poly:
        if self._c.size <= 1:
            return Poly()
        return Poly(self._c[1:] * np.arange(1, self._c.size))

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        acc = np.zeros_like(z)
        for c in self._c[::-1]:
            acc = acc * z + c
        return acc if acc.ndim else complex(acc)

    def _coerce(self, other) -> Poly:
        if isinstance(other, Poly):
            return other
        return Poly([other])

    def __add__(self, other):
        other = self._coerce(other)
        n = max(self._c.size, other._c.size)
        return Poly(self.padded(n) + other.padded(n))

    __radd__ = __add__

    def __neg__(self):
        return Poly(-self._c)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, Poly):
            return Poly(self._c * complex(other))
        if self.is_zero or other.is_zero:
            return Poly()
        return Poly(np.convolve(self._c, other._c))

    __rmul__ = __mul__

    def __pow__(self, k: int):
        out = Poly([1.0])
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other):
        if not isinstance(other, Poly):
            return NotImplemented
        return self._c.shape == other._c.shape and bool(np.all(self._c == other._c))

    def __hash__(self):
        return hash(self._c.tobytes())

    def allclose(self, other: Poly, rtol: float = 1e-12, atol: float = 0.0) -> bool:
        n = max(self._c.size, other._c.size)
        return bool(np.allclose(self.padded(n), other.padded(n), rtol=rtol, atol=atol))

    def __repr__(self):
        return f"Poly({self._c.tolist()!r})"

    def to_json(self) -> list:
        return [[float(c.real), float(c.imag)] for c in self._c]

    @classmethod
    def from_json(cls, data) -> Poly:
        return cls([_parse_number(v) for v in data])


def eval_and_derivative(p: Poly, z: complex) -> tuple[complex, complex]:
    """Horner evaluation of ``p(z)`` and ``p'(z)`` in one pass."""
    if p.is_zero:
        raise DomainError("cannot evaluate the zero polynomial")
    val = 0j
    der = 0j
    for c in p.coeffs[::-1]:
        der = der * z + val
        val = val * z + c
    return val, der


def shift(p: Poly, z0: complex) -> Poly:
    """Taylor recentering: returns ``q`` with ``q(t) = p(t + z0)``."""
    c = np.array(p.coeffs, dtype=complex)
    n = c.size
    # repeated synthetic division by (s - z0)
    for k in range(n - 1):
        for j in range(n - 2, k - 1, -1):
            c[j] += z0 * c[j + 1]
    return Poly(c)


@dataclass(frozen=True)
class RootSet:
    """All roots of a polynomial, with multiplicity.

    ``residual`` is the largest scaled evaluation residual
    ``|p(z)| / (max|c| * (1 + |z|)**n)`` over the computed roots.
    """

    roots: np.ndarray
    residual: float

    def __len__(self):
        return self.roots.size

    @property
    def abscissa(self) -> float:
        if self.roots.size == 0:
            raise DomainError("abscissa of an empty root set is undefined")
        return float(np.max(self.roots.real))

    def clusters(self) -> list[tuple[complex, int]]:
        """Group numerically split multiple roots.

        A group of k roots is accepted as one k-fold root when all members lie
        within ``10 * rho**(1/k) * (1 + |center|)`` of the centroid, with
        ``rho = max(residual, eps)``. Largest groups are tried first.
        """
        rho = max(self.residual, EPS)
        remaining = list(range(self.roots.size))
        out = []
        while remaining:
            i = remaining[0]
            zr = self.roots[remaining]
            order = np.argsort(np.abs(zr - self.roots[i]), kind="stable")
            for k in range(len(remaining), 0, -1):
                members = zr[order[:k]]
                center = members.mean()
                radius = 10.0 * rho ** (1.0 / k) * (1.0 + abs(center))
                if k == 1 or np.max(np.abs(members - center)) <= radius:
                    out.append((complex(center), k))
                    taken = {remaining[j] for j in order[:k]}
                    remaining = [r for r in remaining if r not in taken]
                    break
        return out


def _horner_batch(c: np.ndarray, z: np.ndarray):
    # c: (B, n+1) ascending, z: (B, n); returns p, p', sum|c||z|^j
    val = np.zeros_like(z)
    der = np.zeros_like(z)
    bound = np.zeros(z.shape)
    az = np.abs(z)
    for j in range(c.shape[1] - 1, -1, -1):
        cj = c[:, j : j + 1]
        der = der * z + val
        val = val * z + cj
        bound = bound * az + np.abs(cj)
    return val, der, bound


def _initial_guesses(c: np.ndarray) -> np.ndarray:
    B, n1 = c.shape
    n = n1 - 1
    radius = 1.0 + np.max(np.abs(c[:, :-1] / c[:, -1:]), axis=1)
    k = np.arange(n)
    # angular offset and a small radial wobble keep the start off the real axis
    # and away from conjugate symmetry
    angles = 2.0 * np.pi * k / n + 0.4
    wobble = 1.0 + 0.01 * np.sin(1.7 * k + 0.3)
    return radius[:, None] * wobble[None, :] * np.exp(1j * angles)[None, :]


def _aberth(c: np.ndarray, max_iter: int = MAX_ITER):
    """Simultaneous Aberth-Ehrlich iteration on a batch of monic polynomials."""
    B, n1 = c.shape
    n = n1 - 1
    z = _initial_guesses(c)
    done = np.zeros((B, n), dtype=bool)
    eye = np.eye(n, dtype=bool)
    for it in range(max_iter):
        val, der, bound = _horner_batch(c, z)
        at_noise = np.abs(val) <= 4.0 * n1 * EPS * bound
        diff = z[:, :, None] - z[:, None, :]
        diff[:, eye] = np.inf
        repulse = np.sum(1.0 / diff, axis=2)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = val / der
            w = ratio / (1.0 - ratio * repulse)
        bad = ~np.isfinite(w)
        # p'(z) == 0 off a root: nudge instead of stepping
        w = np.where(bad, 1e-3 * (1.0 + np.abs(z)) * np.exp(1j * (it + 1.0)), w)
        small = np.abs(w) < STEP_TOL * (1.0 + np.abs(z))
        active = ~done & ~at_noise
        z = np.where(active, z - w, z)
        done |= at_noise | (small & ~bad)
        if done.all():
            return z, True, it + 1
    return z, False, max_iter


def _prepare(coeff_rows: np.ndarray) -> np.ndarray:
    c = np.asarray(coeff_rows, dtype=complex)
    if c.ndim != 2 or c.shape[1] < 2:
        raise DomainError("roots need degree >= 1")
    if np.any(c[:, -1] == 0):
        raise DomainError("leading coefficient must be nonzero in every row")
    return c / c[:, -1:]


def _scaled_residual(c: np.ndarray, z: np.ndarray) -> np.ndarray:
    val, _, _ = _horner_batch(c, z)
    n = c.shape[1] - 1
    scale = np.max(np.abs(c), axis=1)[:, None] * (1.0 + np.abs(z)) ** n
    return np.max(np.abs(val) / scale, axis=1)


def roots_batch(coeff_rows, max_iter: int = MAX_ITER) -> tuple[np.ndarray, np.ndarray]:
    """Roots of many same-degree polynomials at once.

    ``coeff_rows`` has shape (B, n+1), ascending coefficients per row.
    Returns ``(roots, residuals)`` with shapes (B, n) and (B,).
    """
    c = _prepare(coeff_rows)
    z, ok, _ = _aberth(c, max_iter)
    res = _scaled_residual(c, z)
    if not ok or np.any(res > ROOT_RESIDUAL_TOL):
        worst = int(np.argmax(res))
        raise ConvergenceError(
            f"Aberth iteration did not converge (worst row {worst}, residual {res[worst]:.3g})",
            best=z,
            residual=res,
        )
    return z, res


def roots(p: Poly, max_iter: int = MAX_ITER) -> RootSet:
    """Roots of ``p`` with multiplicity; a nonzero constant has none."""
    if p.is_zero:
        raise DomainError("the zero polynomial has no finite root set")
    if p.degree == 0:
        return RootSet(np.zeros(0, dtype=complex), 0.0)
    c = p.coeffs
    # exact zero roots are split off so the iteration never starts on them
    nz = int(np.flatnonzero(c)[0])
    zeros = np.zeros(nz, dtype=complex)
    if c.size - nz < 2:
        return RootSet(zeros, 0.0)
    z, res = roots_batch(c[nz:][None, :], max_iter)
    return RootSet(np.concatenate([zeros, z[0]]), float(res[0]))


def abscissa(p: Poly) -> float:
    """Largest real part over the roots of ``p``."""
    if p.is_zero or p.degree < 1:
        raise DomainError("abscissa of a constant polynomial is undefined (no roots)")
    return roots(p.monic()).abscissa


def abscissa_batch(coeff_rows) -> np.ndarray:
    z, _ = roots_batch(coeff_rows)
    return np.max(z.real, axis=1)


def binomial_power(z: complex, n: int) -> np.ndarray:
    """Ascending coefficients of ``(s - z)**n``."""
    return np.array([comb(n, k) * (-z) ** (n - k) for k in range(n + 1)])
