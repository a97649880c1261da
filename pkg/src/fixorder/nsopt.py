"""Gradient sampling for local minimization of the closed-loop abscissa."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import nnls

from .errors import ConvergenceError, DomainError, NonsmoothPointError
from .plant import Controller, Plant, basis_polys, closed_loop_coeffs
from .poly import roots_batch

log = logging.getLogger(__name__)

SIMPLE_ROOT_TOL = 1e-6
TIE_TOL = 1e-8
ARMIJO = 1e-4
MAX_BACKTRACKS = 60


def _default_radii():
    return tuple(0.1 * 2.0**-k for k in range(24))


@dataclass(frozen=True)
class OptOptions:
    max_iters: int = 500
    sample_count: int | None = None
    radius_schedule: tuple[float, ...] = field(default_factory=_default_radii)
    termination_tol: float = 1e-6
    seed: int = 0
    bfgs_iters: int = 100

    def validate(self, dim: int) -> int:
        r = np.asarray(self.radius_schedule, dtype=float)
        if r.size == 0 or np.any(r <= 0) or np.any(np.diff(r) >= 0):
            raise DomainError("radius_schedule must be positive and strictly decreasing")
        k = 2 * dim if self.sample_count is None else self.sample_count
        if k < dim + 1:
            raise DomainError(f"sample_count must be >= {dim + 1}")
        if self.max_iters < 0 or self.bfgs_iters < 0 or self.termination_tol <= 0:
            raise DomainError("max_iters must be >= 0 and termination_tol > 0")
        return k


@dataclass(frozen=True)
class OptResult:
    controller: Controller
    objective: float
    trace: list[tuple[int, float, float]]
    status: str

    def trace_csv(self) -> str:
        lines = ["iteration,objective,radius"]
        lines += [f"{i},{f!r},{r!r}" for i, f, r in self.trace]
        return "\n".join(lines) + "\n"


def _gradients(plant: Plant, m: int, thetas: np.ndarray):
    """Abscissa values, gradients and a smoothness mask for a batch of parameters."""
    C = closed_loop_coeffs(plant, m, thetas)
    z, _ = roots_batch(C)
    B, n = z.shape
    alpha = z.real.max(axis=1)
    idx = np.argmax(z.real, axis=1)
    za = z[np.arange(B), idx]
    za = np.where(za.imag < 0, za.conj(), za)

    dc = C[:, 1:] * np.arange(1, n + 1)
    dp = np.zeros(B, dtype=complex)
    for j in range(n - 1, -1, -1):
        dp = dp * za + dc[:, j]
    scale = np.max(np.abs(C), axis=1) * (1.0 + np.abs(za)) ** (n - 1)
    smooth = np.abs(dp) > SIMPLE_ROOT_TOL * scale

    # any other root on the active vertical line that is not the conjugate partner
    near = np.abs(z.real - alpha[:, None]) <= TIE_TOL * (1.0 + np.abs(za[:, None]))
    partner = (np.abs(z - za[:, None]) <= TIE_TOL * (1.0 + np.abs(za[:, None]))) | (
        np.abs(z - za[:, None].conj()) <= TIE_TOL * (1.0 + np.abs(za[:, None]))
    )
    partner_count = np.sum(near & partner, axis=1)
    expected = np.where(np.abs(za.imag) > TIE_TOL * (1.0 + np.abs(za)), 2, 1)
    smooth &= (np.sum(near, axis=1) == expected) & (partner_count == expected)

    E = np.array([e.padded(n + 1) for e in basis_polys(plant, m)])  # (P, n+1)
    ev = np.zeros((B, E.shape[0]), dtype=complex)
    for j in range(n, -1, -1):
        ev = ev * za[:, None] + E[None, :, j]
    with np.errstate(divide="ignore", invalid="ignore"):
        grad = np.real(-ev / dp[:, None])
    return alpha, grad, smooth


def abscissa_gradient(plant: Plant, k: Controller) -> np.ndarray:
    """Gradient of the abscissa with respect to ``k.params()``.

    Uses implicit differentiation of the active root ``z``: the entry for a
    parameter multiplying ``e_j(s)`` is ``Re(-e_j(z) / p'(z))``.
    """
    _, grad, smooth = _gradients(plant, k.order, k.params()[None, :])
    if not smooth[0]:
        raise NonsmoothPointError(
            "nonsmooth point: active root is multiple or the maximum real part is tied"
        )
    return grad[0]


def min_norm_in_hull(G: np.ndarray) -> np.ndarray:
    """Minimum-norm element of the convex hull of the rows of ``G``.

    Solved as the least-distance problem ``min |x| s.t. G x >= 1`` through
    NNLS; the hull point is ``x / |x|**2``, or 0 when that problem is
    infeasible (0 lies in the hull).
    """
    G = np.atleast_2d(np.asarray(G, dtype=float))
    k, d = G.shape
    E = np.vstack([G.T, np.ones((1, k))])
    f = np.zeros(d + 1)
    f[-1] = 1.0
    u, _ = nnls(E, f, maxiter=50 * (k + d))
    r = E @ u - f
    if np.linalg.norm(r) < 1e-12 or r[-1] >= 0:
        return np.zeros(d)
    x = -r[:d] / r[-1]
    return x / (x @ x)


def _ball(rng: np.random.Generator, count: int, dim: int, radius: float) -> np.ndarray:
    u = rng.standard_normal((count, dim))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    return u * radius * rng.random((count, 1)) ** (1.0 / dim)


def _objective(plant: Plant, m: int, theta: np.ndarray) -> float:
    try:
        z, _ = roots_batch(closed_loop_coeffs(plant, m, theta[None, :]))
    except ConvergenceError as exc:
        raise ConvergenceError(
            f"objective evaluation failed at theta={theta.tolist()}: {exc}",
            best=exc.best,
            residual=exc.residual,
        ) from exc
    return float(z.real.max())


def _value_grad(plant: Plant, m: int, theta: np.ndarray):
    alpha, grad, _ = _gradients(plant, m, theta[None, :])
    return float(alpha[0]), grad[0]


def _weak_wolfe(plant, m, x, f, g, d, c1=ARMIJO, c2=0.5):
    """Bracketing line search; returns (t, f(x+td), grad) or t = 0 on failure."""
    lo, hi, t = 0.0, np.inf, 1.0
    gd = g @ d
    best = None
    for _ in range(MAX_BACKTRACKS):
        ft, gt = _value_grad(plant, m, x + t * d)
        if not ft < f + c1 * t * gd:
            hi = t
        else:
            best = (t, ft, gt)
            if np.all(np.isfinite(gt)) and gt @ d < c2 * gd:
                lo = t
            else:
                return best
        t = 0.5 * (lo + hi) if np.isfinite(hi) else 2.0 * lo
    return best if best is not None else (0.0, f, g)


def _bfgs(plant, m, theta, f, iters, trace):
    """Nonsmooth BFGS warm start; every accepted step satisfies the Armijo test."""
    dim = theta.size
    _, g = _value_grad(plant, m, theta)
    if not np.all(np.isfinite(g)):
        return theta, f
    H = np.eye(dim) / max(1.0, float(np.linalg.norm(g)))
    for _ in range(iters):
        d = -H @ g
        if not g @ d < 0:
            break
        t, ft, gt = _weak_wolfe(plant, m, theta, f, g, d)
        if t == 0.0:
            break
        s = t * d
        theta, f = theta + s, ft
        trace.append((len(trace), f, 0.0))
        if not np.all(np.isfinite(gt)):
            break
        y = gt - g
        sy = s @ y
        if sy > 0:
            V = np.eye(dim) - np.outer(s, y) / sy
            H = V @ H @ V.T + np.outer(s, s) / sy
        g = gt
    return theta, f


def minimize_abscissa(
    plant: Plant, m: int, start: Controller, opts: OptOptions | None = None
) -> OptResult:
    """Gradient sampling on the abscissa over the ``2m+1`` real controller parameters.

    An optional BFGS phase (``opts.bfgs_iters`` steps, logged with radius 0)
    runs first. Each sampling iteration then draws gradients at the iterate
    and at random points in a ball of the current radius, steps along the
    negated minimum-norm hull element with Armijo backtracking, and moves to
    the next radius when that element is below ``termination_tol`` or no step
    is accepted.
    """
    opts = opts or OptOptions()
    if start.order != m:
        raise DomainError(f"start controller has order {start.order}, expected {m}")
    dim = 2 * m + 1
    count = opts.validate(dim)
    radii = opts.radius_schedule
    rng = np.random.default_rng(opts.seed)

    theta = start.params()
    f = _objective(plant, m, theta)
    trace = [(0, f, 0.0)]
    if opts.bfgs_iters:
        theta, f = _bfgs(plant, m, theta, f, opts.bfgs_iters, trace)
    r = 0
    status = "iteration-cap"
    start_it = len(trace)
    for it in range(start_it, start_it + opts.max_iters):
        eps = radii[r]
        pts = np.vstack([theta, theta + _ball(rng, count, dim, eps)])
        _, grads, smooth = _gradients(plant, m, pts)
        grads = grads[smooth & np.all(np.isfinite(grads), axis=1)]
        g = min_norm_in_hull(grads) if grads.size else np.zeros(dim)
        gnorm = float(np.linalg.norm(g))
        accepted = False
        if gnorm > opts.termination_tol:
            t = 1.0
            for _ in range(MAX_BACKTRACKS):
                trial = theta - t * g
                ft = _objective(plant, m, trial)
                if ft < f - ARMIJO * t * gnorm**2:
                    theta, f = trial, ft
                    accepted = True
                    break
                t *= 0.5
        if accepted:
            trace.append((it, f, eps))
            continue
        if r == len(radii) - 1:
            status = "converged" if gnorm <= opts.termination_tol else "stalled"
            trace.append((it, f, eps))
            break
        r += 1
        log.debug("iteration %d: radius -> %.3g (|g| = %.3g)", it, radii[r], gnorm)
    return OptResult(Controller.from_params(m, theta), f, trace, status)
