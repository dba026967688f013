"""Stationary states of the mean-field dynamics.

The equilibrium density solves the self-consistency (Kirkwood-Monroe) map

    f = T(f),   T(f) = exp(-beta (V + W * f)) / Z(f),

found here by damped fixed-point iteration on a grid.  On the torus with
V = -xi cos(2 pi x), W = -cos(2 pi x) the fixed point collapses to a scalar
equation for the Fourier amplitude A,

    A = beta (xi + I1(A)/I0(A)),      f_inf = e^{A cos(2 pi x)} / I0(A),

solved by bracketing plus a Newton polish.  Uniqueness of the fixed point is
only guaranteed under H-stability of W or ||W||_inf < 1/beta; when both
sufficient conditions fail a warning is emitted and the converged point is
returned as-is (no stability classification is attempted).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import BracketError, IterationError, UnsupportedDomainError
from .grids import DensityGrid, Torus, grid_gradient, line_nodes, torus_nodes
from .potentials import ModelSpec, conv_grad_grid, conv_potential_grid
from .special import bessel_i0, bessel_ratio

DEFAULT_GRID_TORUS = 512
DEFAULT_GRID_LINE = 2048


@dataclass
class BesselSolution:
    """Root of the torus cosine self-consistency equation."""

    amplitude: float
    xi: float
    beta: float
    residual: float

    def __post_init__(self):
        if abs(self.residual) > 1e-12:
            raise IterationError(
                f"self-consistency residual {self.residual:.3e} exceeds 1e-12",
                residual=self.residual,
            )

    def density(self, n: int = DEFAULT_GRID_TORUS) -> DensityGrid:
        x = torus_nodes(n)
        vals = np.exp(self.amplitude * np.cos(2.0 * np.pi * x)) / bessel_i0(self.amplitude)
        return DensityGrid(Torus(), vals, normalize=True)


@dataclass
class EquilibriumResult:
    density: DensityGrid
    residual: float
    iterations: int
    free_energies: Optional[np.ndarray]  # torus solves only


def solve_bessel_selfconsistency(xi: float, beta: float, tol: float = 1e-13) -> BesselSolution:
    """Solve A = beta (xi + I1(A)/I0(A)) for A >= 0."""
    if not beta > 0:
        raise BracketError("beta must be positive")

    def g(a):
        return a - beta * (xi + bessel_ratio(a))

    if xi == 0.0 and beta <= 2.0:
        # A = 0 is the unique root: I1/I0 < A/2 * (2/beta) coverage below the
        # transition at beta = 2.
        return BesselSolution(0.0, xi, beta, residual=g(0.0))

    lo, hi = 0.0, beta * (abs(xi) + 1.0) + 1.0
    if xi == 0.0:
        # beta > 2 here: A = 0 is the unstable symmetric root, step past it
        # so the bracket closes on the nonzero branch
        lo = 1e-8
    glo, ghi = g(lo), g(hi)
    if glo == 0.0:
        lo_root = lo
    elif glo * ghi > 0:
        raise BracketError(f"no sign change on [{lo}, {hi}] (g = {glo:.3e}, {ghi:.3e})")
    else:
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            gm = g(mid)
            if gm == 0.0 or hi - lo < 1e-15 * max(1.0, hi):
                lo = hi = mid
                break
            if glo * gm < 0:
                hi = mid
            else:
                lo, glo = mid, gm
        lo_root = 0.5 * (lo + hi)

    # Newton polish on the bisection output
    a = lo_root
    for _ in range(8):
        r = bessel_ratio(a)
        # d/dA [I1/I0] = 1 - r/A - r^2 for A > 0 (Bessel recurrences)
        slope = 1.0 - beta * (1.0 - (r / a if a > 0 else 0.5) - r * r)
        ga = g(a)
        if slope == 0.0:
            break
        step = ga / slope
        a -= step
        if abs(step) < 0.25 * tol:
            break
    res = g(a)
    if abs(res) > tol:
        raise IterationError(f"Newton polish stalled at residual {res:.3e}", residual=res)
    return BesselSolution(a, xi, beta, residual=res)


def gibbs_from_profile(spec: ModelSpec, f: DensityGrid) -> DensityGrid:
    """One application of the self-consistency map: exp(-beta(V + W*f))/Z."""
    pot = np.asarray(spec.confining.value(f.x), dtype=float) + conv_potential_grid(spec, f)
    expo = -spec.beta * pot
    expo -= expo.max()  # stabilize before exponentiating
    vals = np.exp(expo)
    return f.with_values(vals, normalize=True)


def free_energy(spec: ModelSpec, f: DensityGrid) -> float:
    """E(f) = int V f + (1/2) int (W*f) f + beta^-1 int f log f, torus only."""
    if not isinstance(spec.domain, Torus):
        raise UnsupportedDomainError("free energy is defined on the torus only")
    v_term = f.integrate(np.asarray(spec.confining.value(f.x), dtype=float) * f.values)
    w_term = 0.5 * f.integrate(conv_potential_grid(spec, f) * f.values)
    vals = f.values
    ent = np.where(vals > 0, vals * np.log(np.where(vals > 0, vals, 1.0)), 0.0)
    return v_term + w_term + f.integrate(ent) / spec.beta


def uniqueness_guarantees(spec: ModelSpec, n: int = 4096) -> dict:
    """Sufficient conditions for a unique fixed point: H-stability of W
    (nonnegative Fourier modes of its samples) or ||W||_inf < 1/beta."""
    if isinstance(spec.domain, Torus):
        xs = torus_nodes(n)
        w = np.asarray(spec.interaction.value(xs), dtype=float)
        modes = np.real(np.fft.rfft(w)) / n
        h_stable = bool(np.all(modes[1:] >= -1e-12 * max(1.0, np.abs(modes).max())))
        sup_w = float(np.max(np.abs(w)))
    else:
        half = spec.domain.halfwidth
        xs = np.linspace(-2 * half, 2 * half, n)
        w = np.asarray(spec.interaction.value(xs), dtype=float)
        modes = np.real(np.fft.rfft(w - w.mean())) / n
        h_stable = bool(np.all(modes >= -1e-12 * max(1.0, np.abs(modes).max())))
        sup_w = float(np.max(np.abs(w)))
    small_w = sup_w < 1.0 / spec.beta
    return {"h_stable": h_stable, "small_interaction": small_w, "sup_w": sup_w}


def solve_kirkwood_monroe(
    spec: ModelSpec,
    n: Optional[int] = None,
    damping: float = 0.5,
    tol: float = 1e-13,
    max_iter: int = 2000,
    initial: Optional[DensityGrid] = None,
) -> EquilibriumResult:
    """Damped fixed-point iteration f <- (1-d) f + d T(f) to sup-norm residual tol.

    Tracks the free energy along iterates on the torus and warns if it ever
    increases beyond quadrature slack (the map should descend the free
    energy); warns when neither uniqueness guarantee holds.
    """
    if not 0 < damping <= 1:
        raise IterationError("damping must lie in (0, 1]")
    torus = isinstance(spec.domain, Torus)
    if n is None:
        n = DEFAULT_GRID_TORUS if torus else DEFAULT_GRID_LINE

    guard = uniqueness_guarantees(spec)
    if not (guard["h_stable"] or guard["small_interaction"]):
        warnings.warn(
            "equilibrium uniqueness not guaranteed: interaction is not H-stable "
            f"and sup|W| = {guard['sup_w']:.3g} >= 1/beta = {1.0 / spec.beta:.3g}; "
            "the solver returns whichever fixed point the iteration reaches",
            stacklevel=2,
        )

    if initial is not None:
        f = initial
        if f.n != n:
            raise IterationError("initial guess grid size differs from requested n")
    elif torus:
        f = DensityGrid(spec.domain, np.ones(n), normalize=True)
    else:
        # start from the bare confining Gibbs state
        xs = line_nodes(spec.domain.halfwidth, n)
        expo = -spec.beta * np.asarray(spec.confining.value(xs), dtype=float)
        expo -= expo.max()
        f = DensityGrid(spec.domain, np.exp(expo), normalize=True)

    energies = [] if torus else None
    residual = np.inf
    for it in range(1, max_iter + 1):
        mapped = gibbs_from_profile(spec, f)
        residual = float(np.max(np.abs(f.values - mapped.values)))
        if torus:
            energies.append(free_energy(spec, f))
        if residual <= tol:
            if torus and len(energies) > 2:
                rises = np.diff(np.asarray(energies)) > 1e-10
                if rises.any():
                    warnings.warn(
                        f"free energy increased along {int(rises.sum())} iterate(s); "
                        "the damped map is not descending (check damping/grid)",
                        stacklevel=2,
                    )
            return EquilibriumResult(
                density=mapped,
                residual=residual,
                iterations=it,
                free_energies=None if energies is None else np.asarray(energies),
            )
        f = f.with_values((1.0 - damping) * f.values + damping * mapped.values, normalize=True)
    raise IterationError(
        f"no convergence after {max_iter} iterations (last residual {residual:.3e})",
        residual=residual,
        iterations=max_iter,
    )


def stationarity_residual(spec: ModelSpec, f: DensityGrid) -> float:
    """Sup norm of the stationary Fokker-Planck operator applied to f,

        div((grad V + grad W * f) f) + beta^-1 laplace f,

    discretized with centered differences (O(h^2))."""
    drift = np.asarray(spec.confining.grad(f.x), dtype=float) + conv_grad_grid(spec, f)
    flux = drift * f.values + grid_gradient(spec.domain, f.values) / spec.beta
    return float(np.max(np.abs(grid_gradient(spec.domain, flux))))
