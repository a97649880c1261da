"""SISO plants, fixed-order controllers and the closed-loop polynomial map.

The closed-loop characteristic polynomial of plant ``b/a`` under negative
feedback with controller ``y/x`` is ``a*x + b*y``. It is affine in the
controller parameters ``theta = (x_0, ..., x_{m-1}, y_0, ..., y_m)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .poly import Poly, abscissa, roots

COPRIME_TOL = 1e-8
REAL_TOL = 1e-12


@dataclass(frozen=True)
class Plant:
    num: Poly
    den: Poly

    def __post_init__(self):
        if self.num.is_zero:
            raise DomainError("plant numerator must be nonzero")
        if self.den.is_zero or self.den.degree < 1:
            raise DomainError("plant denominator must have degree >= 1")
        if self.den.degree <= self.num.degree:
            raise DomainError("plant must be strictly proper: deg den > deg num")
        if not (self.num.is_real(REAL_TOL) and self.den.is_real(REAL_TOL)):
            raise DomainError("plant coefficients must be real")
        if self.num.degree >= 1:
            zn = roots(self.num).roots
            zd = roots(self.den).roots
            gap = np.min(np.abs(zn[:, None] - zd[None, :]))
            if gap < COPRIME_TOL:
                raise DomainError(f"num and den share a root (distance {gap:.2e}); not coprime")

    def to_json(self) -> dict:
        return {"num": self.num.to_json(), "den": self.den.to_json()}

    @classmethod
    def from_json(cls, data: dict) -> Plant:
        return cls(Poly.from_json(data["num"]), Poly.from_json(data["den"]))


# two masses and spring constant normalized to one: 1/(s^4 + 2 s^2)
BENCHMARK = Plant(Poly([1.0]), Poly([0.0, 0.0, 2.0, 0.0, 1.0]))


@dataclass(frozen=True)
class Controller:
    """Proper controller ``y(s)/x(s)`` with ``x`` monic of degree ``order``."""

    x: Poly
    y: Poly

    def __post_init__(self):
        if self.x.is_zero:
            raise DomainError("controller denominator x must be nonzero")
        if self.x.lead != 1.0:
            raise DomainError("controller denominator x must be monic")
        if self.y.degree > self.x.degree:
            raise DomainError("controller must be proper: deg y <= deg x")
        if not (self.x.is_real(0.0) and self.y.is_real(0.0)):
            raise DomainError("controller coefficients must be real")

    @property
    def order(self) -> int:
        return self.x.degree

    @classmethod
    def from_params(cls, m: int, theta) -> Controller:
        theta = np.asarray(theta, dtype=float)
        if m < 0:
            raise DomainError("controller order must be >= 0")
        if theta.shape != (2 * m + 1,):
            raise DomainError(f"order {m} needs {2 * m + 1} parameters, got shape {theta.shape}")
        x = np.concatenate([theta[:m], [1.0]])
        return cls(Poly(x), Poly(theta[m:]))

    def params(self) -> np.ndarray:
        m = self.order
        return np.concatenate([self.x.real_coeffs[:m], self.y.padded(m + 1).real])

    def to_json(self) -> dict:
        return {
            "order": self.order,
            "x": self.x.real_coeffs.tolist(),
            "y": self.y.padded(self.order + 1).real.tolist(),
        }

    @classmethod
    def from_json(cls, data: dict) -> Controller:
        x = Poly.from_json(data["x"])
        y = Poly.from_json(data.get("y", []))
        k = cls(Poly(x.coeffs.real), Poly(y.coeffs.real))
        if "order" in data and int(data["order"]) != k.order:
            raise DomainError(f"order {data['order']} does not match deg x = {k.order}")
        return k


def closed_loop_poly(plant: Plant, k: Controller) -> Poly:
    """``a*x + b*y``."""
    return plant.den * k.x + plant.num * k.y


def basis_polys(plant: Plant, m: int) -> list[Poly]:
    """Polynomials multiplying each controller parameter in the affine map."""
    s = Poly([0.0, 1.0])
    xs = [plant.den * s**i for i in range(m)]
    ys = [plant.num * s**i for i in range(m + 1)]
    return xs + ys


def closed_loop_coeffs(plant: Plant, m: int, thetas) -> np.ndarray:
    """Closed-loop coefficients for a batch of parameter vectors, shape (B, n+1)."""
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    n = plant.den.degree + m
    base = (plant.den * Poly.monomial(m)).padded(n + 1).real
    E = np.array([e.padded(n + 1).real for e in basis_polys(plant, m)])
    return base[None, :] + thetas @ E


def objective(plant: Plant, k: Controller) -> float:
    """Closed-loop abscissa; the quantity minimized over controllers."""
    return abscissa(closed_loop_poly(plant, k))
