"""Model specification: confining and interaction potentials on a domain.

A model is (domain, beta, V, W) with V the confining potential and W the
even interaction potential.  Potential kinds are small frozen dataclasses
exposing value/grad/laplacian as vectorized callables on raw coordinates;
domain wrapping is applied by the evaluation helpers here, not by the kinds
themselves.

Three evaluation routes for the interaction term:

* ``conv_grad_density``   grad W * f against a grid density (quadrature),
* ``conv_grad_empirical`` grad W * empirical measure at arbitrary points,
* ``interaction_drift_at_particles`` the same empirical convolution
  evaluated at every particle simultaneously, with exact O(N)
  factorizations for the quadratic and cosine kinds.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, InvariantViolation
from .grids import DensityGrid, Line, Torus, line_nodes, torus_nodes


@dataclass(frozen=True)
class Quadratic:
    """V(x) = a x^2 / 2."""

    a: float

    def value(self, x):
        return 0.5 * self.a * np.square(x)

    def grad(self, x):
        return self.a * np.asarray(x, dtype=float)

    def laplacian(self, x):
        return np.full_like(np.asarray(x, dtype=float), self.a)


@dataclass(frozen=True)
class Bistable:
    """V(x) = a (x^4/4 - x^2/2), double well at x = +-1."""

    a: float

    def value(self, x):
        x = np.asarray(x, dtype=float)
        return self.a * (0.25 * x**4 - 0.5 * x**2)

    def grad(self, x):
        x = np.asarray(x, dtype=float)
        return self.a * (x**3 - x)

    def laplacian(self, x):
        x = np.asarray(x, dtype=float)
        return self.a * (3.0 * x**2 - 1.0)


@dataclass(frozen=True)
class Cosine:
    """V(x) = -a cos(2 pi x), period 1."""

    a: float

    def value(self, x):
        return -self.a * np.cos(2.0 * np.pi * np.asarray(x, dtype=float))

    def grad(self, x):
        return 2.0 * np.pi * self.a * np.sin(2.0 * np.pi * np.asarray(x, dtype=float))

    def laplacian(self, x):
        return (2.0 * np.pi) ** 2 * self.a * np.cos(2.0 * np.pi * np.asarray(x, dtype=float))


@dataclass(frozen=True)
class Zero:
    """Identically zero potential."""

    def value(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))

    def grad(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))

    def laplacian(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class Tabulated:
    """Potential given by samples on a uniform grid, cubic-spline interpolated.

    On a torus the samples are treated as one period and the spline is
    periodic; on the line, natural boundary conditions are used and
    evaluation outside the sampled range extrapolates the spline.
    """

    nodes: tuple = field(repr=False)
    samples: tuple = field(repr=False)
    periodic: bool = False

    @staticmethod
    def from_arrays(nodes, samples, periodic=False):
        return Tabulated(tuple(np.asarray(nodes, float)), tuple(np.asarray(samples, float)), periodic)

    def _spline(self):
        from scipy.interpolate import CubicSpline

        x = np.asarray(self.nodes, dtype=float)
        y = np.asarray(self.samples, dtype=float)
        if self.periodic:
            # close the period so the spline sees matching endpoints
            x = np.append(x, x[0] + 1.0)
            y = np.append(y, y[0])
            return CubicSpline(x, y, bc_type="periodic")
        return CubicSpline(x, y, bc_type="natural")

    def value(self, x):
        s = self._spline()
        x = np.asarray(x, dtype=float)
        return s(np.mod(x, 1.0) if self.periodic else x)

    def grad(self, x):
        s = self._spline().derivative(1)
        x = np.asarray(x, dtype=float)
        return s(np.mod(x, 1.0) if self.periodic else x)

    def laplacian(self, x):
        s = self._spline().derivative(2)
        x = np.asarray(x, dtype=float)
        return s(np.mod(x, 1.0) if self.periodic else x)


EVENNESS_TOL = 1e-12


@dataclass(frozen=True)
class ModelSpec:
    """Domain, inverse temperature, confining potential V, interaction W."""

    domain: object
    beta: float
    confining: object
    interaction: object

    def __post_init__(self):
        if not (isinstance(self.domain, (Torus, Line))):
            raise DomainError(f"unsupported domain {self.domain!r}")
        if not (np.isfinite(self.beta) and self.beta > 0):
            raise DomainError("beta must be positive and finite")
        # W must be even; check on a sample grid rather than trusting the kind.
        probe = np.linspace(0.0, 0.5 if isinstance(self.domain, Torus) else 3.0, 129)
        w_plus = np.asarray(self.interaction.value(probe), dtype=float)
        w_minus = np.asarray(self.interaction.value(-probe), dtype=float)
        dev = float(np.max(np.abs(w_plus - w_minus)))
        if dev > EVENNESS_TOL:
            raise DomainError(f"interaction potential is not even (max asymmetry {dev:.3e})")

    @property
    def inv_beta(self) -> float:
        return 1.0 / self.beta


def grad_potential(spec: ModelSpec, x, which: str = "confining"):
    """Gradient of V or W at x; torus coordinates are wrapped first."""
    kind = spec.confining if which == "confining" else spec.interaction
    x = np.asarray(x, dtype=float)
    if isinstance(spec.domain, Torus):
        x = spec.domain.wrap_centered(x) if which == "interaction" else spec.domain.wrap(x)
    return np.asarray(kind.grad(x), dtype=float)


def _check_normalized(f: DensityGrid):
    m = float(f.weights @ f.values)
    if abs(m - 1.0) > 1e-6:
        raise InvariantViolation(f"convolution requires a normalized density, mass {m!r}")


def conv_grad_density(spec: ModelSpec, f: DensityGrid, x):
    """(grad W * f)(x) by quadrature on f's grid; x scalar or array."""
    _check_normalized(f)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty_like(x)
    kind = spec.interaction
    wrapped = isinstance(spec.domain, Torus)
    # chunk the evaluation points so the (m, n) displacement block stays small
    step = max(1, int(2**20 // f.n))
    fw = f.values * f.weights
    for lo in range(0, x.size, step):
        xs = x[lo : lo + step, None] - f.x[None, :]
        if wrapped:
            xs = spec.domain.wrap_centered(xs)
        out[lo : lo + step] = np.asarray(kind.grad(xs), dtype=float) @ fw
    return out if out.size > 1 else float(out[0])


def conv_potential_density(spec: ModelSpec, f: DensityGrid, x):
    """(W * f)(x) by quadrature on f's grid."""
    _check_normalized(f)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty_like(x)
    kind = spec.interaction
    wrapped = isinstance(spec.domain, Torus)
    step = max(1, int(2**20 // f.n))
    fw = f.values * f.weights
    for lo in range(0, x.size, step):
        xs = x[lo : lo + step, None] - f.x[None, :]
        if wrapped:
            xs = spec.domain.wrap_centered(xs)
        out[lo : lo + step] = np.asarray(kind.value(xs), dtype=float) @ fw
    return out if out.size > 1 else float(out[0])


def _conv_on_grid(spec: ModelSpec, f: DensityGrid, kernel_fn) -> np.ndarray:
    """Convolution of a kernel (W or grad W samples) with f, on f's own nodes.

    Torus: circulant product evaluated by FFT, identical to the trapezoid sum.
    Line: discrete linear convolution of the weighted samples with the kernel
    sampled on the doubled displacement range.
    """
    _check_normalized(f)
    fw = f.values * f.weights
    if isinstance(spec.domain, Torus):
        disp = spec.domain.wrap_centered(torus_nodes(f.n))
        ker = np.asarray(kernel_fn(disp), dtype=float)
        # (K * f)_j = sum_k ker_{j-k} fw_k : circular convolution
        return np.real(np.fft.ifft(np.fft.fft(ker) * np.fft.fft(fw)))
    n = f.n
    disp = (np.arange(2 * n - 1) - (n - 1)) * f.h
    ker = np.asarray(kernel_fn(disp), dtype=float)
    from scipy.signal import fftconvolve

    return fftconvolve(ker, fw)[n - 1 : 2 * n - 1]


def conv_grad_grid(spec: ModelSpec, f: DensityGrid) -> np.ndarray:
    """(grad W * f) sampled on f's own nodes."""
    return _conv_on_grid(spec, f, spec.interaction.grad)


def conv_potential_grid(spec: ModelSpec, f: DensityGrid) -> np.ndarray:
    """(W * f) sampled on f's own nodes."""
    return _conv_on_grid(spec, f, spec.interaction.value)


def conv_grad_empirical(spec: ModelSpec, positions, x):
    """Empirical-measure convolution (1/N) sum_i grad W(x - X_i), O(N) per point."""
    positions = np.asarray(positions, dtype=float)
    if positions.size == 0:
        raise DomainError("empirical convolution against an empty ensemble")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    kind = spec.interaction
    wrapped = isinstance(spec.domain, Torus)
    out = np.empty_like(x)
    step = max(1, int(2**20 // positions.size))
    for lo in range(0, x.size, step):
        xs = x[lo : lo + step, None] - positions[None, :]
        if wrapped:
            xs = spec.domain.wrap_centered(xs)
        out[lo : lo + step] = np.mean(np.asarray(kind.grad(xs), dtype=float), axis=1)
    return out if out.size > 1 else float(out[0])


def interaction_drift_at_particles(spec: ModelSpec, positions: np.ndarray) -> np.ndarray:
    """(1/N) sum_i grad W(x_n - x_i) for every particle n, along the last axis.

    Quadratic W on the line and cosine W factor exactly through one or two
    empirical moments, giving an O(N) evaluation that matches the pairwise
    sum to rounding; any other kind falls back to the vectorized pairwise
    computation.
    """
    x = np.asarray(positions, dtype=float)
    kind = spec.interaction
    if isinstance(kind, Zero):
        return np.zeros_like(x)
    if isinstance(kind, Quadratic) and isinstance(spec.domain, Line):
        return kind.a * (x - x.mean(axis=-1, keepdims=True))
    if isinstance(kind, Cosine):
        # sin(a-b) = sin a cos b - cos a sin b, so the empirical average of
        # grad W(x_n - x_i) is a combination of two trigonometric moments.
        s = np.sin(2.0 * np.pi * x)
        c = np.cos(2.0 * np.pi * x)
        cbar = c.mean(axis=-1, keepdims=True)
        sbar = s.mean(axis=-1, keepdims=True)
        return 2.0 * np.pi * kind.a * (s * cbar - c * sbar)
    return _pairwise_interaction(spec, x)


def _pairwise_interaction(spec: ModelSpec, x: np.ndarray) -> np.ndarray:
    diff = x[..., :, None] - x[..., None, :]
    if isinstance(spec.domain, Torus):
        diff = spec.domain.wrap_centered(diff)
    return np.mean(np.asarray(spec.interaction.grad(diff), dtype=float), axis=-1)


def default_line_halfwidth(spec: ModelSpec) -> float:
    """Truncation half-width for line-domain grids: 6 Gibbs standard
    deviations by the stiffest-mode estimate, clamped to [4, 40]."""
    stiff = []
    for kind in (spec.confining, spec.interaction):
        if isinstance(kind, (Quadratic, Bistable)) and kind.a > 0:
            stiff.append(kind.a)
    a_min = min(stiff) if stiff else 1.0
    return float(np.clip(6.0 / np.sqrt(spec.beta * a_min), 4.0, 40.0))


def uniform_convexity(spec: ModelSpec) -> tuple:
    """(alpha, gamma): uniform convexity constants of V and W.

    Defined here only for quadratic kinds (and Zero interaction, gamma = 0);
    anything else has no uniform convexity constant and raises DomainError.
    """
    if isinstance(spec.confining, Quadratic) and spec.confining.a > 0:
        alpha = spec.confining.a
    else:
        raise DomainError("confining potential has no positive uniform convexity constant")
    if isinstance(spec.interaction, Quadratic) and spec.interaction.a >= 0:
        gamma = spec.interaction.a
    elif isinstance(spec.interaction, Zero):
        gamma = 0.0
    else:
        raise DomainError("interaction potential has no uniform convexity constant")
    return alpha, gamma


def sup_norms_torus(kind, n: int = 4096) -> dict:
    """Sup norms of value/grad/laplacian over one period, on an n-point grid."""
    x = torus_nodes(n)
    return {
        "value": float(np.max(np.abs(np.asarray(kind.value(x), dtype=float)))),
        "grad": float(np.max(np.abs(np.asarray(kind.grad(x), dtype=float)))),
        "laplacian": float(np.max(np.abs(np.asarray(kind.laplacian(x), dtype=float)))),
    }
