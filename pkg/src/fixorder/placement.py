"""Pole placement through the Sylvester system and root-clustering search.

For a plant ``b/a`` and controller order ``m`` the closed-loop coefficients
below the leading term are ``S @ theta + a*s**m`` where ``S`` is the Sylvester
matrix. When ``m >= deg a - 1`` any target is reachable; below that the system
is overdetermined and clustering all poles at one point ``z`` imposes a
consistency condition on ``z``.
"""

from __future__ import annotations

import logging
from math import comb
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DomainError
from .plant import Controller, Plant, closed_loop_poly
from .poly import Poly, binomial_power

log = logging.getLogger(__name__)

CONSISTENCY_TOL = 1e-8
POLISH_TOL = 1e-10
MARGINAL_TOL = 1e-10
SCAN_POINTS = 10_000
DEFAULT_BRACKET = (-5.0, 5.0)


@dataclass(frozen=True)
class PlacementResult:
    controller: Controller
    achieved: Poly
    residual: float

    def to_json(self) -> dict:
        return {
            "controller": self.controller.to_json(),
            "achieved": self.achieved.to_json(),
            "residual": self.residual,
        }


@dataclass(frozen=True)
class ClusterSolution:
    z: float
    controller: Controller
    consistency_residual: float

    @property
    def kind(self) -> str:
        if abs(self.z) <= MARGINAL_TOL:
            return "marginal"
        return "stable" if self.z < 0 else "unstable"

    def to_json(self) -> dict:
        return {
            "z": self.z,
            "kind": self.kind,
            "consistency_residual": self.consistency_residual,
            "controller": self.controller.to_json(),
        }


def sylvester_matrix(a: Poly, b: Poly, m: int) -> np.ndarray:
    """Map from ``[x_0..x_{m-1}, y_0..y_m]`` to coefficients ``p_0..p_{n-1}``.

    ``n = deg a + m`` is the closed-loop degree; the leading part ``a*s**m``
    is not included. Square when ``m = deg a - 1``.
    """
    if m < 0:
        raise DomainError("controller order must be >= 0")
    try:
        Plant(b, a)
    except DomainError as exc:
        raise DomainError(f"invalid Sylvester pair (matrix would be singular): {exc}") from exc
    n = a.degree + m
    s = Poly([0.0, 1.0])
    polys = [a * s**i for i in range(m)] + [b * s**i for i in range(m + 1)]
    return np.column_stack([p.padded(n).real for p in polys])


def _monic_part(plant: Plant, m: int) -> np.ndarray:
    n = plant.den.degree + m
    return (plant.den * Poly.monomial(m)).padded(n + 1).real[:n]


def _solve(S: np.ndarray, rhs: np.ndarray) -> tuple[np.ndarray, float]:
    if S.shape[0] == S.shape[1]:
        # LU keeps integer-valued benchmark data exact; QR would not
        theta = scipy.linalg.solve(S, rhs)
    else:
        theta, *_ = scipy.linalg.lstsq(S, rhs, lapack_driver="gelsy")
    return theta, float(np.linalg.norm(S @ theta - rhs))


def place_poles(plant: Plant, m: int, target: Poly) -> PlacementResult:
    """Controller of order ``m`` whose closed loop equals ``target`` (monic)."""
    a = plant.den
    n = a.degree + m
    if m < a.degree - 1:
        raise DomainError(
            f"order {m} < deg a - 1 = {a.degree - 1}: arbitrary placement impossible"
        )
    if target.degree != n:
        raise DomainError(f"target degree {target.degree} != deg a + m = {n}")
    if not target.is_real(1e-12) or target.lead != 1.0:
        raise DomainError("target must be real and monic")
    t = target.real_coeffs * a.lead.real
    S = sylvester_matrix(a, plant.num, m)
    rhs = t[:n] - _monic_part(plant, m)
    theta, residual = _solve(S, rhs)
    if residual > CONSISTENCY_TOL * np.linalg.norm(t):
        raise DomainError(f"Sylvester system not solvable (residual {residual:.3g})")
    k = Controller.from_params(m, theta)
    return PlacementResult(k, closed_loop_poly(plant, k), residual)


def _cluster_rhs(plant: Plant, m: int, zs: np.ndarray) -> np.ndarray:
    n = plant.den.degree + m
    k = np.arange(n + 1)
    binom = np.array([comb(n, j) for j in k], dtype=float)
    # (s - z)^n coefficients: C(n, j) (-z)^(n-j), scaled by lead(a)
    T = binom[None, :] * (-zs[:, None]) ** (n - k)[None, :] * plant.den.lead.real
    return T[:, :n] - _monic_part(plant, m)[None, :]


def _bisect(f, lo: float, hi: float, flo: float) -> float:
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        fm = f(mid)
        if fm == 0.0:
            return mid
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def cluster_all_poles(
    plant: Plant,
    m: int,
    bracket: tuple[float, float] = DEFAULT_BRACKET,
    points: int = SCAN_POINTS,
) -> list[ClusterSolution]:
    """All real ``z`` in ``bracket`` where the closed loop can equal ``(s - z)**n``.

    The residual of the overdetermined system is projected onto the left null
    space of the Sylvester matrix, giving a signed consistency function per
    null direction. Its sign changes over a ``points``-grid are bisected, and a
    candidate is kept when every projected component vanishes.
    """
    a = plant.den
    if m >= a.degree - 1:
        raise DomainError(
            f"order {m} >= deg a - 1: system is not overdetermined, use place_poles"
        )
    n = a.degree + m
    S = sylvester_matrix(a, plant.num, m)
    U, sv, _ = np.linalg.svd(S)
    rank = int(np.sum(sv > 1e-10 * sv[0]))
    N = U[:, rank:]

    def g(zs):
        return _cluster_rhs(plant, m, np.atleast_1d(np.asarray(zs, dtype=float))) @ N

    grid = np.linspace(bracket[0], bracket[1], points)
    G = g(grid)
    candidates = list(grid[np.all(G == 0.0, axis=1)])
    for comp in range(N.shape[1]):
        col = G[:, comp]
        idx = np.flatnonzero(np.sign(col[:-1]) * np.sign(col[1:]) < 0)
        for i in idx:
            f = lambda z, c=comp: float(g(z)[0, c])
            candidates.append(_bisect(f, grid[i], grid[i + 1], col[i]))

    solutions: list[ClusterSolution] = []
    for z in sorted(candidates):
        if any(abs(z - s.z) < 1e-9 for s in solutions):
            continue
        target_norm = np.linalg.norm(binomial_power(z, n)) * abs(a.lead.real)
        if np.linalg.norm(g(z)) > POLISH_TOL * max(1.0, target_norm):
            continue
        rhs = _cluster_rhs(plant, m, np.array([z]))[0]
        theta, residual = _solve(S, rhs)
        if residual > CONSISTENCY_TOL * target_norm:
            continue
        solutions.append(ClusterSolution(float(z), Controller.from_params(m, theta), residual))
    if not solutions:
        log.warning("no consistent clustering point for m=%d in bracket %s", m, bracket)
    return solutions
