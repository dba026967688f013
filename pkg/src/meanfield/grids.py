"""Spatial domains and grid-sampled probability densities.

Two domains appear throughout: the unit torus (period fixed to 1) and a
truncated line segment [-L, L].  Densities live on uniform grids of cell
centers: torus nodes j/n with uniform weight 1/n (the periodic trapezoid
rule, spectrally accurate for smooth periodic integrands) and line nodes
-L + (j+1/2)h with uniform weight h = 2L/n (midpoint rule; for densities
whose derivatives vanish at the truncation boundary this is superconvergent
for the same Euler-Maclaurin reason).  Uniform weights make the
finite-volume flux form conserve mass to rounding and make discrete
relative entropy a true KL divergence of cell masses, hence nonnegative.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InvariantViolation

MASS_TOL = 1e-10


@dataclass(frozen=True)
class Torus:
    """Unit-period circle; the fundamental cell is [0, 1)."""

    period: float = 1.0

    def wrap(self, x):
        return np.mod(x, self.period)

    def wrap_centered(self, x):
        """Wrap displacements into [-period/2, period/2)."""
        p = self.period
        return np.mod(np.asarray(x) + 0.5 * p, p) - 0.5 * p


@dataclass(frozen=True)
class Line:
    """Truncated real line [-halfwidth, halfwidth]."""

    halfwidth: float

    def __post_init__(self):
        if not self.halfwidth > 0:
            raise DomainError("line halfwidth must be positive")


def torus_nodes(n: int) -> np.ndarray:
    return np.arange(n) / n


def line_nodes(halfwidth: float, n: int) -> np.ndarray:
    h = 2.0 * halfwidth / n
    return -halfwidth + (np.arange(n) + 0.5) * h


class DensityGrid:
    """A nonnegative, unit-mass density sampled on a uniform grid.

    Attributes
    ----------
    domain : Torus or Line
    x : nodes, shape (n,)
    values : density samples at the nodes, shape (n,)
    """

    def __init__(self, domain, values, normalize: bool = False):
        values = np.asarray(values, dtype=float)
        if values.ndim != 1 or values.size < 8:
            raise DomainError("density values must be a 1d array with >= 8 nodes")
        if isinstance(domain, Torus):
            x = torus_nodes(values.size)
            h = domain.period / values.size
        elif isinstance(domain, Line):
            x = line_nodes(domain.halfwidth, values.size)
            h = 2.0 * domain.halfwidth / values.size
        else:
            raise DomainError(f"unknown domain {domain!r}")
        w = np.full(values.size, h)
        if np.any(values < 0):
            worst = float(values.min())
            if worst < -1e-13 * max(1.0, float(np.abs(values).max())):
                raise InvariantViolation(f"density has negative values (min {worst:.3e})")
            values = np.clip(values, 0.0, None)
        self.domain = domain
        self.x = x
        self.h = float(h)
        self.weights = w
        if normalize:
            m = float(w @ values)
            if m <= 0:
                raise InvariantViolation("density has nonpositive mass")
            values = values / m
        self.values = values
        m = float(w @ values)
        if abs(m - 1.0) > MASS_TOL:
            raise InvariantViolation(f"density mass {m!r} deviates from 1 beyond {MASS_TOL}")

    @property
    def n(self) -> int:
        return self.values.size

    def integrate(self, integrand) -> float:
        """Quadrature of `integrand` (array of node samples) on this grid."""
        return float(self.weights @ np.asarray(integrand, dtype=float))

    def mean(self) -> float:
        return self.integrate(self.x * self.values)

    def variance(self) -> float:
        m = self.mean()
        return self.integrate((self.x - m) ** 2 * self.values)

    def same_grid(self, other: "DensityGrid") -> bool:
        return (
            type(self.domain) is type(other.domain)
            and self.n == other.n
            and self.domain == other.domain
        )

    def require_same_grid(self, other: "DensityGrid"):
        if not self.same_grid(other):
            raise DomainError("densities live on different grids")

    def with_values(self, values, normalize: bool = False) -> "DensityGrid":
        return DensityGrid(self.domain, values, normalize=normalize)


def grid_gradient(domain, values: np.ndarray) -> np.ndarray:
    """Centered second-order gradient of node samples; periodic on the torus,
    one-sided second-order at line endpoints."""
    values = np.asarray(values, dtype=float)
    n = values.size
    if isinstance(domain, Torus):
        h = domain.period / n
        return (np.roll(values, -1) - np.roll(values, 1)) / (2.0 * h)
    h = 2.0 * domain.halfwidth / n
    out = np.empty_like(values)
    out[1:-1] = (values[2:] - values[:-2]) / (2.0 * h)
    out[0] = (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * h)
    out[-1] = (3.0 * values[-1] - 4.0 * values[-2] + values[-3]) / (2.0 * h)
    return out
