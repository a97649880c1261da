"""Closed-loop step response, real pseudozero sets and coefficient-rounding fragility."""

from __future__ import annotations

from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal

import numpy as np

from .errors import DomainError
from .plant import Controller, Plant, closed_loop_poly
from .poly import Poly, RootSet, abscissa, roots

SETTLING_BAND = 0.02


@dataclass(frozen=True)
class StepResponse:
    times: np.ndarray
    values: np.ndarray
    final_value: float
    settling_time: float
    settled: bool

    def to_csv(self) -> str:
        rows = "\n".join(f"{t!r},{v!r}" for t, v in zip(self.times.tolist(), self.values.tolist()))
        return "time,value\n" + rows + "\n"


def _companion(num: np.ndarray, den: np.ndarray):
    """Controllable canonical realization of strictly proper ``num/den``, ``den`` monic."""
    n = den.size - 1
    A = np.zeros((n, n))
    A[:-1, 1:] = np.eye(n - 1)
    A[-1, :] = -den[:-1]
    B = np.zeros(n)
    B[-1] = 1.0
    C = np.zeros(n)
    C[: num.size] = num
    return A, B, C


def settling_time(times: np.ndarray, values: np.ndarray, final: float, band: float = SETTLING_BAND):
    """First time after which every sample stays within ``band * |final|`` of ``final``."""
    outside = np.flatnonzero(np.abs(values - final) > band * abs(final))
    if outside.size == 0:
        return float(times[0]), True
    last = outside[-1]
    if last == times.size - 1:
        return float("inf"), False
    return float(times[last + 1]), True


def step_response(
    plant: Plant, k: Controller, horizon: float = 30.0, dt: float = 1e-3
) -> StepResponse:
    """Unit step of ``T = P / (1 + P K) = b x / (a x + b y)``.

    Fixed-step classical RK4 on the controllable canonical realization. For an
    LTI system with constant input one RK4 step is exactly the map
    ``x -> M x + N u`` with ``M`` the fourth-order Taylor polynomial of
    ``exp(dt A)``, which is what is iterated here.
    """
    if dt <= 0 or horizon <= 0:
        raise DomainError("dt and horizon must be positive")
    p = closed_loop_poly(plant, k)
    if abscissa(p) >= 0:
        raise DomainError("closed loop is not stable; step response has no final value")
    num = (plant.num * k.x).real_coeffs
    den = p.real_coeffs
    if den[0] == 0.0:
        raise DomainError("p(0) = 0: no DC gain")
    lead = den[-1]
    A, B, C = _companion(num / lead, den / lead)
    n = A.shape[0]
    hA = dt * A
    I = np.eye(n)
    M = I + hA @ (I + hA / 2 @ (I + hA / 3 @ (I + hA / 4)))
    N = dt * (I + hA / 2 @ (I + hA / 3 @ (I + hA / 4))) @ B
    steps = int(round(horizon / dt))
    times = np.arange(steps + 1) * dt
    X = np.zeros(n)
    values = np.empty(steps + 1)
    values[0] = C @ X
    for i in range(1, steps + 1):
        X = M @ X + N
        values[i] = C @ X
    final = float(num[0] / den[0])
    ts, ok = settling_time(times, values, final)
    return StepResponse(times, values, final, ts, ok)


def _vandermonde_rows(zs: np.ndarray, n: int, perturb_leading: bool) -> np.ndarray:
    V = zs[..., None] ** np.arange(n + 1)
    return V if perturb_leading else V[..., :n]


def _min_norm_real(p: Poly, zs: np.ndarray, perturb_leading: bool):
    if not p.is_real(1e-12):
        raise DomainError("real pseudozero sets need a real polynomial")
    if p.degree < 1:
        raise DomainError("pseudozero sets need degree >= 1")
    n = p.degree
    zs = np.asarray(zs, dtype=complex)
    V = _vandermonde_rows(zs.ravel(), n, perturb_leading)
    pz = p(zs.ravel())
    # real system [Re v; Im v] d = -[Re p(z); Im p(z)], solved for the minimum-norm d
    M = np.stack([V.real, V.imag], axis=1)  # (B, 2, n+1)
    rhs = -np.stack([pz.real, pz.imag], axis=1)
    U, sv, Vh = np.linalg.svd(M, full_matrices=False)
    cutoff = 1e-13 * sv[:, :1]
    inv = np.where(sv > cutoff, 1.0 / np.where(sv > cutoff, sv, 1.0), 0.0)
    coef = inv * np.einsum("bij,bi->bj", U, rhs)
    d = np.einsum("bj,bjk->bk", coef, Vh)
    return d.reshape(zs.shape + (d.shape[-1],))


def pseudozero_perturbation(p: Poly, z: complex, perturb_leading: bool = True) -> np.ndarray:
    """Minimum-norm real coefficient perturbation (ascending) that makes ``z`` a root."""
    return _min_norm_real(p, np.array([z]), perturb_leading)[0]


def pseudozero_distance(p: Poly, z: complex, perturb_leading: bool = True) -> float:
    return float(np.linalg.norm(pseudozero_perturbation(p, z, perturb_leading)))


@dataclass(frozen=True)
class PseudozeroGrid:
    region: tuple[float, float, float, float]  # re_min, re_max, im_min, im_max
    resolution: tuple[int, int]  # nx, ny
    distances: np.ndarray  # (ny, nx); row i is imaginary part im[i]
    epsilon: float

    @property
    def re(self) -> np.ndarray:
        return np.linspace(self.region[0], self.region[1], self.resolution[0])

    @property
    def im(self) -> np.ndarray:
        return np.linspace(self.region[2], self.region[3], self.resolution[1])

    def membership(self, epsilon: float | None = None) -> np.ndarray:
        return self.distances <= (self.epsilon if epsilon is None else epsilon)

    def to_csv(self) -> str:
        lines = ["re,im,distance"]
        for i, y in enumerate(self.im):
            for j, x in enumerate(self.re):
                lines.append(f"{x!r},{y!r},{float(self.distances[i, j])!r}")
        return "\n".join(lines) + "\n"

    def to_pgm(self) -> str:
        """Plain PGM; members black, top row is the largest imaginary part."""
        mask = self.membership()[::-1]
        ny, nx = mask.shape
        body = "\n".join(" ".join("0" if v else "255" for v in row) for row in mask)
        return f"P2\n{nx} {ny}\n255\n{body}\n"


def pseudozero_grid(
    p: Poly,
    region: tuple[float, float, float, float],
    resolution: tuple[int, int],
    epsilon: float,
    perturb_leading: bool = True,
) -> PseudozeroGrid:
    nx, ny = resolution
    if nx < 2 or ny < 2:
        raise DomainError("resolution must be at least 2x2")
    if epsilon < 0:
        raise DomainError("epsilon must be nonnegative")
    re = np.linspace(region[0], region[1], nx)
    im = np.linspace(region[2], region[3], ny)
    Z = re[None, :] + 1j * im[:, None]
    D = np.linalg.norm(_min_norm_real(p, Z, perturb_leading), axis=-1)
    return PseudozeroGrid(tuple(map(float, region)), (nx, ny), D, float(epsilon))


def round_significant(value: float, digits: int) -> float:
    """Round to ``digits`` significant decimal digits, halves away from zero."""
    if value == 0.0 or not np.isfinite(value):
        return value
    d = Decimal(repr(value))
    quantum = Decimal(1).scaleb(d.adjusted() - digits + 1)
    return float(d.quantize(quantum, rounding=ROUND_HALF_UP))


@dataclass(frozen=True)
class FragilityReport:
    nominal: Controller
    rounded: Controller
    nominal_roots: RootSet
    rounded_roots: RootSet
    max_displacement: float

    def to_json(self) -> dict:
        def zs(r):
            return [[float(z.real), float(z.imag)] for z in r.roots]

        return {
            "nominal_controller": self.nominal.to_json(),
            "rounded_controller": self.rounded.to_json(),
            "nominal_roots": zs(self.nominal_roots),
            "rounded_roots": zs(self.rounded_roots),
            "max_displacement": self.max_displacement,
        }


def fragility_experiment(plant: Plant, k: Controller, digits: int) -> FragilityReport:
    """Round the controller coefficients and compare closed-loop roots.

    Displacement is measured from each perturbed root to the nearest nominal
    root cluster center, so a numerically split multiple root counts as one point.
    """
    if digits < 1:
        raise DomainError("digits must be >= 1")
    if abscissa(closed_loop_poly(plant, k)) >= 0:
        raise DomainError("nominal closed loop is not stable")
    theta = np.array([round_significant(float(v), digits) for v in k.params()])
    rk = Controller.from_params(k.order, theta)
    nominal = roots(closed_loop_poly(plant, k))
    perturbed = roots(closed_loop_poly(plant, rk))
    centers = np.array([c for c, _ in nominal.clusters()])
    disp = float(np.max(np.min(np.abs(perturbed.roots[:, None] - centers[None, :]), axis=1)))
    return FragilityReport(k, rk, nominal, perturbed, disp)
