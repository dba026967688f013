"""Periodic homogenization of the linearized dynamics and CLT diagnostics.

The unwrapped process on the line sees the 1-periodic stationary density
phi_inf; its long-time behaviour is Brownian with effective coefficient

    D = int (1 + Phi')^2 phi_inf dx,

where Phi solves the cell problem (phi_inf Phi')' = phi_inf' with periodic
boundary conditions and the mean-zero normalization int Phi phi_inf = 0.
In one dimension the cell problem integrates exactly: Phi' = -1 + c/phi_inf
with c the harmonic mean of phi_inf, and D collapses to c.  Everything here
is d=1; the matrix-valued case needs an elliptic solver this package does
not carry.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.stats import kstest

from .errors import DomainError, InsufficientSampleError, UnsupportedDomainError
from .grids import DensityGrid, Line, Torus, grid_gradient
from .simulate import TrajectoryRecord

#: pass window for the sample-variance ratio in clt_diagnostic
VARIANCE_WINDOW = (0.85, 1.15)
#: asymptotic 5% Kolmogorov-Smirnov threshold for D_n * sqrt(n)
KS_THRESHOLD = 1.36
#: below this horizon the diffusive regime is doubtful for O(1) relaxation rates
SHORT_HORIZON = 10.0


@dataclass(frozen=True)
class CellSolution:
    """Solution of the cell problem on one period.

    phi and grad_phi are sampled on the nodes of the density that produced
    them; D is the effective diffusion coefficient (the harmonic mean of
    the stationary density in d=1).
    """

    phi: np.ndarray
    grad_phi: np.ndarray
    D: float
    weight: DensityGrid

    def __post_init__(self):
        if not (np.isfinite(self.D) and self.D > 0):
            raise DomainError(f"effective diffusion must be positive, got {self.D}")
        center = abs(self.weight.integrate(self.phi * self.weight.values))
        if center > 1e-10:
            raise DomainError(f"cell solution is not mean-zero against phi_inf: {center:.3e}")


def _require_positive_torus(phi_inf: DensityGrid) -> None:
    if not isinstance(phi_inf.domain, Torus):
        raise UnsupportedDomainError("the cell problem is posed on the unit torus")
    if np.min(phi_inf.values) <= 0.0:
        raise DomainError("phi_inf must be strictly positive on the grid")


def effective_diffusion(phi_inf: DensityGrid) -> float:
    """Harmonic-mean closed form D = 1 / int (1/phi_inf) for d=1."""
    _require_positive_torus(phi_inf)
    return 1.0 / phi_inf.integrate(1.0 / phi_inf.values)


def solve_cell_problem(phi_inf: DensityGrid) -> CellSolution:
    """Exact quadrature construction of the periodic cell corrector.

    Phi' = -1 + c/phi_inf with c the harmonic mean, so the discrete mean of
    Phi' vanishes identically and the antiderivative is taken spectrally
    (phi_inf is smooth and periodic); the additive constant is fixed by
    int Phi phi_inf = 0.
    """
    _require_positive_torus(phi_inf)
    c = 1.0 / phi_inf.integrate(1.0 / phi_inf.values)
    grad_phi = -1.0 + c / phi_inf.values

    n = phi_inf.n
    modes = np.fft.rfft(grad_phi)
    k = np.arange(modes.size)
    with np.errstate(divide="ignore", invalid="ignore"):
        anti = np.where(k > 0, modes / (2j * np.pi * k), 0.0)
    phi = np.fft.irfft(anti, n=n)
    phi = phi - phi_inf.integrate(phi * phi_inf.values)

    # flux-formula route; must agree with c to roundoff
    d_flux = phi_inf.integrate((1.0 + grad_phi) ** 2 * phi_inf.values)
    return CellSolution(phi=phi, grad_phi=grad_phi, D=float(d_flux), weight=phi_inf)


def cell_residual(solution: CellSolution) -> float:
    """Sup norm of (phi_inf Phi')' + phi_inf' by centered differences.

    The corrector minimizes int (1+Phi')^2 phi_inf, whose Euler-Lagrange
    equation is (phi_inf (1+Phi'))' = 0; in one dimension the discrete flux
    is constant by construction, so this vanishes to roundoff (well inside
    the O(h^2) truncation of the difference operator).
    """
    phi_inf = solution.weight
    flux = phi_inf.values * solution.grad_phi
    residual = grid_gradient(phi_inf.domain, flux) + grid_gradient(phi_inf.domain, phi_inf.values)
    return float(np.max(np.abs(residual)))


@dataclass(frozen=True)
class CltReport:
    """X_t/sqrt(t) against the N(0, 2 beta^-1 D) limit."""

    n: int
    sample_var: float
    target_var: float
    ks_stat: float
    passed: bool

    @property
    def variance_ratio(self) -> float:
        return self.sample_var / self.target_var

    @property
    def ks_scaled(self) -> float:
        return self.ks_stat * np.sqrt(self.n)


def clt_diagnostic(paths, t: float, d_value: float, beta: float) -> CltReport:
    """Variance-ratio and Kolmogorov-Smirnov check of the diffusive limit.

    paths are unwrapped terminal positions X_t (one per realization).  The
    pass verdict needs the sample variance of X_t/sqrt(t) within 15% of
    2 beta^-1 D and D_n sqrt(n) at most 1.36.  Horizons shorter than
    SHORT_HORIZON draw a warning: the prelimit bias is then not negligible
    for O(1) relaxation rates.
    """
    paths = np.asarray(paths, dtype=float).ravel()
    if paths.size < 50:
        raise InsufficientSampleError(
            f"clt_diagnostic needs at least 50 paths, got {paths.size}"
        )
    if not (np.isfinite(t) and t > 0 and np.isfinite(d_value) and d_value > 0 and beta > 0):
        raise DomainError("t, D and beta must be positive and finite")
    if not np.all(np.isfinite(paths)):
        raise DomainError("paths must be finite")
    if t < SHORT_HORIZON:
        warnings.warn(
            f"horizon t={t:g} is short for a diffusive-limit check; "
            f"t >= {SHORT_HORIZON:g} is recommended",
            stacklevel=2,
        )
    target_var = 2.0 * d_value / beta
    scaled = paths / np.sqrt(t)
    sample_var = float(np.var(scaled, ddof=1))
    ks_stat = float(kstest(scaled / np.sqrt(target_var), "norm").statistic)
    ratio = sample_var / target_var
    passed = (VARIANCE_WINDOW[0] <= ratio <= VARIANCE_WINDOW[1]
              and ks_stat * np.sqrt(paths.size) <= KS_THRESHOLD)
    return CltReport(n=int(paths.size), sample_var=sample_var,
                     target_var=target_var, ks_stat=ks_stat, passed=passed)


def rescaled_path(record: TrajectoryRecord, epsilon: float, times=None) -> TrajectoryRecord:
    """Diffusive rescaling s -> eps * X(s / eps^2).

    With times omitted the whole record is rescaled instant by instant
    (epsilon = 1 is the identity).  An explicit times grid is linearly
    interpolated and must stay inside the rescaled coverage
    [0, eps^2 t_final].
    """
    if not (np.isfinite(epsilon) and epsilon > 0):
        raise DomainError("epsilon must be positive and finite")
    if record.times.size < 2:
        raise DomainError("rescaling needs a record with at least one step")
    eps2 = epsilon * epsilon
    t_final = float(record.times[-1])
    dt_rec = float(record.times[1] - record.times[0])
    if eps2 * t_final < dt_rec * (1.0 - 1e-12):
        raise DomainError(
            f"eps^2 t_final = {eps2 * t_final:.3g} does not cover one recorded "
            f"step ({dt_rec:.3g}); the rescaled window is empty"
        )
    if times is None:
        return TrajectoryRecord(times=eps2 * record.times, states=epsilon * record.states)
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size < 1:
        raise DomainError("times must be a nonempty 1-D array")
    if np.any(times < -1e-15) or np.any(times > eps2 * t_final * (1.0 + 1e-12)):
        raise DomainError(
            f"requested times lie outside the rescaled coverage [0, {eps2 * t_final:.6g}]"
        )
    states = epsilon * np.interp(times / eps2, record.times, record.states)
    return TrajectoryRecord(times=times, states=states)


def wrap_density(f_line: DensityGrid) -> DensityGrid:
    """Fold a line density onto the unit torus: phi(x) = sum_k f(x + k).

    The fold is exact cell stacking, so it preserves mass to roundoff; that
    requires the line grid to be commensurate with the period (spacing h
    dividing 1, an integer number of periods, so each line cell lands
    centered in a torus cell).  Mass visibly reaching the line boundary
    draws a truncation warning.
    """
    if not isinstance(f_line.domain, Line):
        raise DomainError("wrap_density folds a line density onto the torus")
    h = float(f_line.x[1] - f_line.x[0])
    m = int(round(1.0 / h))
    periods = f_line.n // max(m, 1)
    if m < 2 or abs(m * h - 1.0) > 1e-9 * m or periods * m != f_line.n:
        raise DomainError(
            f"line grid (halfwidth {f_line.domain.halfwidth}, n {f_line.n}) is not "
            "commensurate with the unit period; choose n so the spacing divides 1"
        )
    # cell j folds onto torus cell (j mod m), shifted by half a period when
    # the grid spans an odd number of periods
    if periods % 2 == 0:
        shift = 0
    elif m % 2 == 0:
        shift = m // 2
    else:
        raise DomainError(
            "an odd number of periods on an odd grid folds cell centers onto "
            "cell edges; use an even number of periods"
        )
    edge_mass = h * float(f_line.values[0] + f_line.values[-1])
    if edge_mass > 1e-8:
        warnings.warn(
            f"line density carries ~{edge_mass:.2e} mass at the domain edge; "
            "the fold truncates those tails",
            stacklevel=2,
        )
    folded = f_line.values.reshape(periods, m).sum(axis=0)
    return DensityGrid(Torus(), np.roll(folded, shift), normalize=False)
