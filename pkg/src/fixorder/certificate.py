"""Nonsmooth local-optimality certificate for a fully clustered closed loop.

At a controller whose closed loop is ``(s - z)**n`` the shifted polynomial in
``t = s - z`` is ``t**n + A(d)(t)`` with ``A`` linear in the parameter
perturbation ``d``. The abscissa ``gamma`` of ``t**n + w`` has, at ``w = 0``,

    subdifferential          {c : c_{n-1} = -1/n,  Re c_{n-2} <= 0}
    horizon subdifferential  {c : c_{n-1} = 0,     Re c_{n-2} <= 0}

for ``w = sum c_j t**j`` of degree ``n - 1``. If ``N(A*)`` meets the horizon
set only at 0, the chain rule gives ``d(gamma o A)(0) = A* d gamma(0)``, and
0 in the interior of that set certifies a sharp local minimizer.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .plant import Controller, Plant, basis_polys, closed_loop_coeffs, closed_loop_poly
from .poly import abscissa_batch, shift

CLUSTER_TOL = 1e-8
RANK_TOL = 1e-10
STRICT_TOL = 1e-8
CONSISTENT_TOL = 1e-10


@dataclass(frozen=True)
class ShiftedMap:
    z_star: float
    n: int
    matrix: np.ndarray  # (n, P): column j holds coefficients t^0..t^{n-1} of A(e_j)
    offset: float = 0.0  # max |coeff| of shift(p, z*) - t^n at the nominal point

    @property
    def param_dim(self) -> int:
        return self.matrix.shape[1]

    def apply(self, d) -> np.ndarray:
        return self.matrix @ np.asarray(d)


@dataclass(frozen=True)
class CertificateReport:
    cq_passed: bool
    cq_kernel_dim: int
    interiority_passed: bool
    c_solution: np.ndarray | None
    strictness_margin: float
    tau_estimate: float
    verdict: str
    explanation: str = ""
    map: ShiftedMap | None = field(default=None, repr=False)
    adjoint: np.ndarray | None = field(default=None, repr=False)

    def to_json(self) -> dict:
        def cplx(a):
            return None if a is None else [[float(v.real), float(v.imag)] for v in np.ravel(a)]

        return {
            "verdict": self.verdict,
            "cq_passed": self.cq_passed,
            "cq_kernel_dim": self.cq_kernel_dim,
            "interiority_passed": self.interiority_passed,
            "c_solution": cplx(self.c_solution),
            "strictness_margin": self.strictness_margin,
            "tau_estimate": self.tau_estimate,
            "explanation": self.explanation,
            "z_star": None if self.map is None else self.map.z_star,
            "A": None if self.map is None else np.real(self.map.matrix).tolist(),
            "A_adjoint": None if self.adjoint is None else np.real(self.adjoint).tolist(),
        }


def build_shifted_map(plant: Plant, k: Controller) -> ShiftedMap:
    """Linear part of the closed loop in shifted coordinates around the cluster.

    The closed-loop map is affine, so the column for parameter ``j`` is the
    shifted basis polynomial ``e_j(t + z*)`` itself.
    """
    p = closed_loop_poly(plant, k)
    n = p.degree
    if n < 1:
        raise DomainError("certificate requires a closed loop of degree >= 1")
    p = p * (1.0 / p.lead)
    z_star = float(-p.coeffs[n - 1].real / n)
    rest = shift(p, z_star).padded(n + 1)[:n]
    offset = float(np.max(np.abs(rest))) if n else 0.0
    if offset > CLUSTER_TOL:
        raise DomainError(
            "certificate requires a fully clustered nominal point "
            f"(shift(p, {z_star:.6g}) - t^{n} has coefficient {offset:.3g})"
        )
    lead = plant.den.lead.real
    cols = [shift(e, z_star).padded(n + 1)[:n] / lead for e in basis_polys(plant, k.order)]
    return ShiftedMap(z_star, n, np.column_stack(cols), offset)


def adjoint(smap: ShiftedMap) -> np.ndarray:
    """Adjoint under ``<u, v> = Re sum u_j conj(v_j)`` on both sides: the conjugate transpose."""
    return smap.matrix.conj().T


def _rank_and_null(M: np.ndarray) -> tuple[int, np.ndarray]:
    if M.size == 0:
        return 0, np.eye(M.shape[1])
    _, sv, Vh = np.linalg.svd(M)
    if sv.size == 0 or sv[0] == 0.0:
        return 0, np.eye(M.shape[1])
    rank = int(np.sum(sv > RANK_TOL * sv[0]))
    return rank, Vh[rank:].conj().T


def check_constraint_qualification(smap: ShiftedMap) -> tuple[bool, np.ndarray]:
    """``N(A*)`` meets the horizon subdifferential only at 0.

    Returns the verdict and a basis of the kernel of ``A*`` restricted to
    ``c_{n-1} = 0`` (columns, in coordinates ``c_0..c_{n-2}``).
    """
    As = adjoint(smap)
    _, kernel = _rank_and_null(As[:, : smap.n - 1])
    if kernel.shape[1] == 0:
        return True, kernel
    # the kernel is a subspace, so v or -v has Re c_{n-2} <= 0 and lies in the horizon set
    return False, kernel


def _tau_estimate(plant, k, smap, samples, h, seed) -> float:
    if samples <= 0:
        return float("nan")
    rng = np.random.default_rng(seed)
    theta = k.params()
    u = rng.standard_normal((samples, theta.size))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    alphas = abscissa_batch(closed_loop_coeffs(plant, k.order, theta[None, :] + h * u))
    return float(np.min((alphas - smap.z_star) / h))


def certify_local_min(
    plant: Plant,
    k: Controller,
    tau_samples: int = 1000,
    tau_step: float = 1e-6,
    seed: int = 0,
) -> CertificateReport:
    """Check ``0 in int A* d gamma(0)`` by the unique-solve route.

    Steps: constraint qualification; solve ``A* c = 0`` with
    ``c_{n-1} = -1/n``; require a unique solution, ``Re c_{n-2} < 0`` strictly
    and ``A*`` onto the parameter space on the free coordinates.
    """
    smap = build_shifted_map(plant, k)
    As = adjoint(smap)
    n, P = smap.n, smap.param_dim
    tau = _tau_estimate(plant, k, smap, tau_samples, tau_step, seed)
    cq, kernel = check_constraint_qualification(smap)

    def report(interior, c, margin, verdict, why):
        return CertificateReport(
            cq, kernel.shape[1], interior, c, margin, tau, verdict, why, smap, As
        )

    if n < 2:
        return report(False, None, float("nan"), "inconclusive", "closed loop degree < 2")
    if not cq:
        return report(False, None, float("nan"), "failed", "constraint qualification fails")

    free = As[:, : n - 1]
    fixed = -1.0 / n
    rhs = -As[:, n - 1] * fixed
    rank_free, _ = _rank_and_null(free)
    if rank_free < n - 1:
        return report(
            False, None, float("nan"), "inconclusive",
            "A* c = 0 has multiple solutions; interiority needs convex analysis beyond unique-solve",
        )
    c_free, *_ = np.linalg.lstsq(free, rhs, rcond=None)
    resid = float(np.linalg.norm(free @ c_free - rhs))
    c = np.concatenate([c_free, [fixed]]).astype(complex)
    if resid > CONSISTENT_TOL * max(1.0, float(np.linalg.norm(rhs))):
        return report(
            False, c, float("nan"), "failed",
            f"0 is not in the subdifferential image (residual {resid:.3g})",
        )
    margin = float(-c[n - 2].real)
    onto = rank_free == P
    interior = onto and margin > STRICT_TOL
    if not onto:
        why = "A* restricted to free coordinates is not onto the parameter space"
    elif not margin > STRICT_TOL:
        why = f"inequality Re c_(n-2) <= 0 not strict (margin {margin:.3g})"
    else:
        why = "0 lies in the interior of the subdifferential"
    return report(interior, c, margin, "certified" if interior else "failed", why)
