"""Drift-parameter estimation from a single tagged trajectory.

Four one-parameter model families are supported, each placing the unknown
theta either in the confining potential or in the interaction strength:

    ou_theta_in_V         V = theta x^2/2,          W = x^2/2
    ou_theta_in_W         V = x^2/2,                W = theta x^2/2
    bistable_theta_in_V   V = theta (x^4/4-x^2/2),  W = x^2/2
    bistable_theta_in_W   V = x^4/4-x^2/2,          W = theta x^2/2

Two likelihoods are available for a discretely observed path.  The
*linearized* one freezes the interaction term at the stationary density
f_inf(theta) (solved on demand and memoized on a theta grid), so the drift
is a fixed function of x.  The *nonlinear* one keeps the time-dependent
mean of the law, supplied either in closed form (linear-drift families
only) or as a recorded ensemble-mean curve.  Both use the left-point
(Ito) quadrature

    L(theta) = beta/2 sum b(t_k, X_k) dX_k - beta/4 sum b(t_k, X_k)^2 dt_k,

and every closed-form estimator below is the exact stationary point of the
corresponding quadratic-in-theta objective, clipped to the search domain.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Tuple

import numpy as np
from scipy.optimize import brentq

from .errors import ConfigError, DomainError, EstimationError
from .grids import DensityGrid, Line
from .potentials import Bistable, ModelSpec, Quadratic, conv_grad_grid, default_line_halfwidth
from .equilibrium import solve_kirkwood_monroe
from .simulate import TrajectoryRecord

FAMILY_TAGS = (
    "ou_theta_in_V",
    "ou_theta_in_W",
    "bistable_theta_in_V",
    "bistable_theta_in_W",
)

DRIFT_MODES = ("linearized", "nonlinear_exact_mean", "nonlinear_empirical_mean")

#: theta spacing of the memoized equilibrium solves; queries interpolate
#: linearly between the two bracketing knots.
THETA_KNOT_STEP = 0.01

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def family_potentials(tag: str, theta: float):
    """(confining, interaction) pair for one family at parameter theta."""
    if tag == "ou_theta_in_V":
        return Quadratic(theta), Quadratic(1.0)
    if tag == "ou_theta_in_W":
        return Quadratic(1.0), Quadratic(theta)
    if tag == "bistable_theta_in_V":
        return Bistable(theta), Quadratic(1.0)
    if tag == "bistable_theta_in_W":
        return Bistable(1.0), Quadratic(theta)
    raise ConfigError(f"unknown model family {tag!r}; expected one of {FAMILY_TAGS}")


def build_family_spec(tag: str, theta: float, beta: float = 1.0,
                      halfwidth: Optional[float] = None) -> ModelSpec:
    """ModelSpec on the line for one family member.

    When halfwidth is omitted it is sized from the potentials at this theta;
    callers that sweep theta should fix one halfwidth for the whole sweep so
    all equilibria live on a common grid.
    """
    confining, interaction = family_potentials(tag, theta)
    if halfwidth is None:
        probe = ModelSpec(Line(8.0), beta, confining, interaction)
        halfwidth = default_line_halfwidth(probe)
    return ModelSpec(Line(halfwidth), beta, confining, interaction)


def linearized_drift_coefficients(tag: str, theta: float) -> Tuple[float, float]:
    """(c3, c1) with frozen-mean drift b(x) = -c3 x^3 - c1 x.

    Every family here has an even stationary density, so the frozen
    interaction term is the quadratic coefficient times x.  Used as the
    closed-form cross-check for the equilibrium-based drift and to wire
    linearized simulations.
    """
    if tag == "ou_theta_in_V":
        return 0.0, theta + 1.0
    if tag == "ou_theta_in_W":
        return 0.0, 1.0 + theta
    if tag == "bistable_theta_in_V":
        return theta, 1.0 - theta
    if tag == "bistable_theta_in_W":
        return 1.0, theta - 1.0
    raise ConfigError(f"unknown model family {tag!r}; expected one of {FAMILY_TAGS}")


class EquilibriumCache:
    """Memoized stationary solves for one family, keyed on a theta grid.

    Knots sit at integer multiples of THETA_KNOT_STEP; a query at general
    theta interpolates the interaction-convolution profile linearly between
    the two bracketing knots.  All knots share one spatial grid so profiles
    are interpolable; the grid halfwidth is sized for the widest equilibrium
    the search domain can produce.
    """

    def __init__(self, tag: str, beta: float = 1.0,
                 theta_domain: Tuple[float, float] = (0.01, 20.0),
                 n: int = 2048):
        if tag not in FAMILY_TAGS:
            raise ConfigError(f"unknown model family {tag!r}; expected one of {FAMILY_TAGS}")
        lo, hi = float(theta_domain[0]), float(theta_domain[1])
        if not (np.isfinite(lo) and np.isfinite(hi) and 0.0 < lo < hi):
            raise ConfigError("theta domain must satisfy 0 < lo < hi")
        self.tag = tag
        self.beta = float(beta)
        self.theta_domain = (lo, hi)
        self.n = int(n)
        self.halfwidth = max(
            default_line_halfwidth(build_family_spec(tag, t, beta, halfwidth=8.0))
            for t in (lo, 1.0, hi)
        )
        self._knots: Dict[int, Tuple[np.ndarray, np.ndarray]] = {}
        self._nodes: Optional[np.ndarray] = None
        self._warned_uniqueness = False

    @property
    def nodes(self) -> np.ndarray:
        if self._nodes is None:
            self._solve_knot(self._bracket(self.theta_domain[0])[0])
        return self._nodes

    def _bracket(self, theta: float) -> Tuple[int, int]:
        k = int(math.floor(theta / THETA_KNOT_STEP))
        return k, k + 1

    def _solve_knot(self, k: int) -> Tuple[np.ndarray, np.ndarray]:
        if k in self._knots:
            return self._knots[k]
        theta_k = k * THETA_KNOT_STEP
        spec = build_family_spec(self.tag, theta_k, self.beta, self.halfwidth)
        # the convolution inside the fixed-point map rounds at eps * sup|W|
        # over the displacement range, so the residual cannot go below that
        span = np.array([0.0, 2.0 * spec.domain.halfwidth])
        w_scale = float(np.max(np.abs(spec.interaction.value(span))))
        tol = max(1e-12, 8.0 * np.finfo(float).eps * self.beta * w_scale)
        with warnings.catch_warnings():
            if self._warned_uniqueness:
                # the guarantee status is a property of the family, not of
                # the individual knot; surface it once per cache
                warnings.filterwarnings("ignore", message="equilibrium uniqueness not guaranteed")
            result = solve_kirkwood_monroe(spec, n=self.n, tol=tol)
        self._warned_uniqueness = True
        f_inf = result.density
        if self._nodes is None:
            self._nodes = f_inf.x
        entry = (f_inf.values.copy(), conv_grad_grid(spec, f_inf))
        self._knots[k] = entry
        return entry

    def _interp_knots(self, theta: float, which: int) -> np.ndarray:
        theta = float(theta)
        if not np.isfinite(theta) or theta < 0.0:
            raise DomainError(f"theta must be finite and nonnegative, got {theta}")
        k_lo, k_hi = self._bracket(theta)
        lo_entry = self._solve_knot(k_lo)
        frac = theta / THETA_KNOT_STEP - k_lo
        if frac <= 1e-12:
            return lo_entry[which]
        hi_entry = self._solve_knot(k_hi)
        return (1.0 - frac) * lo_entry[which] + frac * hi_entry[which]

    def stationary_density(self, theta: float) -> np.ndarray:
        """f_inf(theta) sampled on .nodes (theta-interpolated between knots)."""
        return self._interp_knots(theta, 0)

    def interaction_profile(self, theta: float) -> np.ndarray:
        """(grad W(.;theta) * f_inf(theta)) on .nodes."""
        return self._interp_knots(theta, 1)

    def drift(self, theta: float, x: np.ndarray) -> np.ndarray:
        """Frozen-mean drift -grad V(x;theta) - (grad W * f_inf)(x) at points x.

        The confining gradient is evaluated exactly; only the convolution
        term goes through the grid (linear interpolation, clamped at the
        grid ends, which matters only for excursions beyond the halfwidth).
        """
        confining, _ = family_potentials(self.tag, theta)
        x = np.asarray(x, dtype=float)
        conv = np.interp(x, self.nodes, self.interaction_profile(theta))
        return -np.asarray(confining.grad(x), dtype=float) - conv


@dataclass(frozen=True)
class LikelihoodConfig:
    """Everything a likelihood evaluation needs besides theta.

    mean_curve must be aligned with observation.times (one mean per recorded
    instant); x0_mean is the initial-law mean used by the exact-mean drifts
    and the linear-family closed forms.
    """

    tag: str
    observation: TrajectoryRecord
    beta: float = 1.0
    theta_domain: Tuple[float, float] = (0.01, 20.0)
    drift_mode: str = "linearized"
    mean_curve: Optional[np.ndarray] = None
    x0_mean: Optional[float] = None

    def __post_init__(self):
        if self.tag not in FAMILY_TAGS:
            raise ConfigError(f"unknown model family {self.tag!r}; expected one of {FAMILY_TAGS}")
        if self.drift_mode not in DRIFT_MODES:
            raise ConfigError(f"unknown drift mode {self.drift_mode!r}; expected one of {DRIFT_MODES}")
        if not (np.isfinite(self.beta) and self.beta > 0):
            raise ConfigError("beta must be positive and finite")
        lo, hi = self.theta_domain
        if not (np.isfinite(lo) and np.isfinite(hi) and 0.0 < lo < hi):
            raise ConfigError("theta domain must satisfy 0 < lo < hi")
        if not isinstance(self.observation, TrajectoryRecord):
            raise ConfigError("observation must be a TrajectoryRecord")
        if self.mean_curve is not None:
            curve = np.asarray(self.mean_curve, dtype=float)
            if curve.ndim != 1 or curve.size != self.observation.times.size:
                raise ConfigError(
                    "mean_curve must be one value per recorded instant "
                    f"({self.observation.times.size}), got shape {curve.shape}"
                )
            object.__setattr__(self, "mean_curve", curve)
        if self.x0_mean is not None and not np.isfinite(self.x0_mean):
            raise ConfigError("x0_mean must be finite")


def _check_theta(config: LikelihoodConfig, theta: float) -> float:
    theta = float(theta)
    lo, hi = config.theta_domain
    if not (np.isfinite(theta) and lo <= theta <= hi):
        raise DomainError(f"theta {theta} outside the search domain [{lo}, {hi}]")
    return theta


def _left_point_arrays(record: TrajectoryRecord, n_steps: Optional[int] = None):
    """(t, x, dx, dt) at left points, optionally truncated to n_steps increments."""
    times = record.times
    states = record.states
    if n_steps is None:
        n_steps = times.size - 1
    t = times[:n_steps]
    x = states[:n_steps]
    dx = states[1:n_steps + 1] - states[:n_steps]
    dt = times[1:n_steps + 1] - times[:n_steps]
    return t, x, dx, dt


def _quadrature(beta: float, b: np.ndarray, dx: np.ndarray, dt: np.ndarray) -> float:
    return float(0.5 * beta * np.sum(b * dx) - 0.25 * beta * np.sum(b * b * dt))


def loglik_linearized(config: LikelihoodConfig, theta: float,
                      cache: Optional[EquilibriumCache] = None) -> float:
    """Log-likelihood with the interaction frozen at f_inf(theta).

    A path with fewer than two recorded instants carries no increments and
    scores exactly 0.  Pass a cache when evaluating repeatedly; otherwise a
    throwaway one is built per call.
    """
    theta = _check_theta(config, theta)
    if config.observation.times.size < 2:
        return 0.0
    if cache is None:
        cache = EquilibriumCache(config.tag, config.beta, config.theta_domain)
    elif cache.tag != config.tag:
        raise ConfigError(f"cache was built for {cache.tag!r}, not {config.tag!r}")
    t, x, dx, dt = _left_point_arrays(config.observation)
    b = cache.drift(theta, x)
    return _quadrature(config.beta, b, dx, dt)


def _exact_mean_curve(config: LikelihoodConfig, theta: float, t: np.ndarray) -> np.ndarray:
    if config.x0_mean is None:
        raise ConfigError("exact-mean drift needs x0_mean (the initial-law mean)")
    if config.tag == "ou_theta_in_V":
        # mean ODE m' = -theta m under the candidate parameter
        return config.x0_mean * np.exp(-theta * t)
    if config.tag == "ou_theta_in_W":
        # V = x^2/2 alone moves the mean; the interaction term vanishes on it
        return config.x0_mean * np.exp(-t)
    raise ConfigError(
        f"no closed-form mean for {config.tag!r}; use drift_mode='nonlinear_empirical_mean'"
    )


def _nonlinear_drift(config: LikelihoodConfig, theta: float,
                     t: np.ndarray, x: np.ndarray) -> np.ndarray:
    confining, interaction = family_potentials(config.tag, theta)
    if config.drift_mode == "nonlinear_exact_mean":
        mean_t = _exact_mean_curve(config, theta, t)
    else:
        if config.mean_curve is None:
            raise ConfigError("empirical-mean drift needs a recorded mean_curve")
        mean_t = config.mean_curve[:t.size]
    # quadratic interaction: (grad W * law)(x) = a (x - mean)
    return -np.asarray(confining.grad(x), dtype=float) - interaction.a * (x - mean_t)


def loglik_nonlinear(config: LikelihoodConfig, theta: float) -> float:
    """Log-likelihood with the time-dependent interaction mean kept.

    drift_mode selects where the mean comes from: 'nonlinear_exact_mean'
    (linear-drift families only) or 'nonlinear_empirical_mean' (recorded
    ensemble mean aligned with the observation times).
    """
    theta = _check_theta(config, theta)
    if config.drift_mode == "linearized":
        raise ConfigError("config.drift_mode is 'linearized'; call loglik_linearized")
    if config.observation.times.size < 2:
        return 0.0
    t, x, dx, dt = _left_point_arrays(config.observation)
    b = _nonlinear_drift(config, theta, t, x)
    return _quadrature(config.beta, b, dx, dt)


def loglik(config: LikelihoodConfig, theta: float,
           cache: Optional[EquilibriumCache] = None) -> float:
    """Dispatch on config.drift_mode."""
    if config.drift_mode == "linearized":
        return loglik_linearized(config, theta, cache)
    return loglik_nonlinear(config, theta)


def argmax_loglik(config: LikelihoodConfig,
                  cache: Optional[EquilibriumCache] = None,
                  tol: float = 1e-8) -> float:
    """Golden-section maximizer of the configured likelihood over theta_domain.

    Assumes a unimodal objective, which holds for every family here (the
    objective is an exactly quadratic, concave function of theta whenever
    the drift is affine in theta, and numerically unimodal otherwise).
    """
    if config.drift_mode == "linearized" and cache is None:
        cache = EquilibriumCache(config.tag, config.beta, config.theta_domain)

    def objective(th: float) -> float:
        return loglik(config, th, cache)

    lo, hi = config.theta_domain
    a, b = lo, hi
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = objective(c), objective(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = objective(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = objective(d)
    return 0.5 * (a + b)


# ---------------------------------------------------------------------------
# closed-form estimators


@dataclass(frozen=True)
class EstimatePair:
    """One trajectory's parameter estimates under both likelihoods.

    convention records the stochastic-integral quadrature so downstream
    consumers never have to guess; diagnostics carries the raw normal-
    equation pieces (denominators are the negative objective curvatures up
    to a factor beta/2, so larger means better conditioned).
    """

    theta_mle: float
    theta_linearized: float
    convention: str = "ito-left"
    diagnostics: dict = field(default_factory=dict)


@dataclass(frozen=True)
class EstimateTrace:
    """One estimator evaluated over nested observation windows."""

    horizons: np.ndarray
    estimates: np.ndarray
    estimator_kind: str
    diagnostics: np.ndarray

    def __post_init__(self):
        horizons = np.asarray(self.horizons, dtype=float)
        estimates = np.asarray(self.estimates, dtype=float)
        diagnostics = np.asarray(self.diagnostics, dtype=float)
        if horizons.ndim != 1 or horizons.shape != estimates.shape or horizons.shape != diagnostics.shape:
            raise DomainError("horizons, estimates and diagnostics must be aligned 1-D arrays")
        if horizons.size and np.any(np.diff(horizons) <= 0):
            raise DomainError("horizons must be strictly increasing")
        if not np.all(np.isfinite(estimates)):
            raise DomainError("estimates must be finite")
        object.__setattr__(self, "horizons", horizons)
        object.__setattr__(self, "estimates", estimates)
        object.__setattr__(self, "diagnostics", diagnostics)


def _clip_to_domain(value: float, domain: Tuple[float, float]) -> float:
    return float(min(max(value, domain[0]), domain[1]))


def _ratio_estimate(numerator: float, denominator: float,
                    domain: Tuple[float, float], label: str) -> float:
    if not np.isfinite(numerator) or not np.isfinite(denominator) or denominator <= 0.0:
        raise EstimationError(
            f"{label}: degenerate normal equation (numerator {numerator!r}, "
            f"denominator {denominator!r}); the path carries no signal for this parameter",
            trace={"numerator": numerator, "denominator": denominator},
        )
    return _clip_to_domain(numerator / denominator, domain)


def _require_mean_curve(config: LikelihoodConfig) -> np.ndarray:
    if config.mean_curve is None:
        raise ConfigError(f"{config.tag}: the exact estimator consumes the recorded ensemble mean")
    return config.mean_curve


def _require_x0_mean(config: LikelihoodConfig) -> float:
    if config.x0_mean is None:
        raise ConfigError(f"{config.tag}: the exact estimator needs x0_mean")
    return float(config.x0_mean)


def _ou_v_root_function(config: LikelihoodConfig, n_steps: Optional[int] = None) -> Callable[[np.ndarray], np.ndarray]:
    """Vectorized estimating equation G(thetas) for theta in V, linear family."""
    m0 = _require_x0_mean(config)
    t, x, dx, dt = _left_point_arrays(config.observation, n_steps)
    i_xdx = float(np.sum(x * dx))
    i_xx = float(np.sum(x * x * dt))
    # fixed right factors of the theta-dependent matvec terms
    t_dx, t_x_dt, x_dt, t_dt = t * dx, t * x * dt, x * dt, t * dt

    def g(thetas) -> np.ndarray:
        thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
        decay = np.exp(-np.outer(thetas, t))
        j1 = decay @ t_dx
        j2 = decay @ t_x_dt
        j3 = decay @ x_dt
        j4 = (decay * decay) @ t_dt
        return (-i_xdx - (thetas + 1.0) * i_xx
                - m0 * j1 - (thetas + 1.0) * m0 * j2 + m0 * j3 + m0 * m0 * j4)

    return g


_ROOT_SCAN_POINTS = 49


def _solve_ou_v_root(config: LikelihoodConfig, anchor: float,
                     n_steps: Optional[int] = None) -> Tuple[float, float]:
    """(theta_hat, equation slope at it) for the theta-in-V linear family.

    For long windows G is dominated by -(theta+1) int X^2 dt and decreases
    through a single root, but on short windows the exp(-theta t) terms can
    fold extra crossings in near the lower edge.  So: scan G on a log grid,
    bracket every decreasing crossing, and keep the one nearest the anchor
    (the linearized estimate, itself consistent).  No decreasing crossing
    means the constrained optimum sits on an edge.
    """
    lo, hi = config.theta_domain
    g = _ou_v_root_function(config, n_steps)
    grid = np.geomspace(lo, hi, _ROOT_SCAN_POINTS)
    if lo < anchor < hi:
        grid = np.sort(np.append(grid, anchor))
    values = g(grid)
    if not np.all(np.isfinite(values)):
        raise EstimationError(
            "ou_theta_in_V: estimating equation is not finite on the search domain",
            trace={"grid": grid, "values": values},
        )
    down = np.nonzero((values[:-1] > 0.0) & (values[1:] <= 0.0))[0]
    if down.size:
        mids = 0.5 * (grid[down] + grid[down + 1])
        k = int(down[np.argmin(np.abs(mids - anchor))])
        root = float(brentq(lambda th: float(g(th)[0]), grid[k], grid[k + 1],
                            xtol=1e-12, rtol=8.9e-16))
    elif values[0] <= 0.0 and values[-1] <= 0.0:
        root = lo            # G < 0 throughout: constrained optimum at the lower edge
    elif values[0] >= 0.0 and values[-1] >= 0.0:
        root = hi
    else:
        # only increasing crossings: both edges are local optima of the
        # surrogate; stay near the consistent preliminary estimate
        root = lo if abs(lo - anchor) <= abs(hi - anchor) else hi
    delta = 1e-5 * max(1.0, abs(root))
    slope = float((g(min(root + delta, hi))[0] - g(max(root - delta, lo))[0]) / (2.0 * delta))
    return root, slope


def closed_form_estimators(config: LikelihoodConfig) -> EstimatePair:
    """Exact stationary points of both likelihoods for one family.

    theta_mle solves the nonlinear (time-dependent mean) normal equation;
    theta_linearized solves the frozen-mean one.  Ratio-form estimates are
    clipped into theta_domain, which is where the constrained quadratic
    objective peaks; the theta-in-V linear family needs a bracketing root
    solve instead because its exact mean depends on theta.
    """
    record = config.observation
    if record.times.size < 2:
        raise EstimationError("closed-form estimators need at least one increment",
                              trace={"n_recorded": int(record.times.size)})
    t, x, dx, dt = _left_point_arrays(record)
    domain = config.theta_domain
    beta_half = 0.5 * config.beta
    diagnostics: dict = {"n_steps": int(dx.size), "horizon": float(record.times[-1])}

    i_xdx = float(np.sum(x * dx))
    i_xx = float(np.sum(x * x * dt))

    if config.tag == "ou_theta_in_V":
        theta_tilde = _ratio_estimate(-i_xdx - i_xx, i_xx, domain, "ou_theta_in_V linearized")
        theta_hat, slope = _solve_ou_v_root(config, anchor=theta_tilde)
        diagnostics["mle_equation_slope"] = slope
        diagnostics["linearized_curvature"] = -beta_half * i_xx

    elif config.tag == "ou_theta_in_W":
        m0 = _require_x0_mean(config)
        g_t = x - m0 * np.exp(-t)
        num = -float(np.sum(g_t * dx)) - float(np.sum(x * g_t * dt))
        den = float(np.sum(g_t * g_t * dt))
        theta_hat = _ratio_estimate(num, den, domain, "ou_theta_in_W exact")
        theta_tilde = _ratio_estimate(-i_xdx - i_xx, i_xx, domain, "ou_theta_in_W linearized")
        diagnostics["mle_curvature"] = -beta_half * den
        diagnostics["linearized_curvature"] = -beta_half * i_xx

    elif config.tag == "bistable_theta_in_V":
        mean_t = _require_mean_curve(config)[:t.size]
        phi = x ** 3 - x
        den = float(np.sum(phi * phi * dt))
        num_hat = -float(np.sum(phi * dx)) - float(np.sum((x - mean_t) * phi * dt))
        num_tilde = -float(np.sum(phi * dx)) - float(np.sum(x * phi * dt))
        theta_hat = _ratio_estimate(num_hat, den, domain, "bistable_theta_in_V exact")
        theta_tilde = _ratio_estimate(num_tilde, den, domain, "bistable_theta_in_V linearized")
        diagnostics["mle_curvature"] = -beta_half * den
        diagnostics["linearized_curvature"] = -beta_half * den

    else:  # bistable_theta_in_W
        mean_t = _require_mean_curve(config)[:t.size]
        phi = x ** 3 - x
        dev = x - mean_t
        den_hat = float(np.sum(dev * dev * dt))
        num_hat = -float(np.sum(dev * dx)) - float(np.sum(dev * phi * dt))
        theta_hat = _ratio_estimate(num_hat, den_hat, domain, "bistable_theta_in_W exact")
        num_tilde = -i_xdx - float(np.sum(x * phi * dt))
        theta_tilde = _ratio_estimate(num_tilde, i_xx, domain, "bistable_theta_in_W linearized")
        diagnostics["mle_curvature"] = -beta_half * den_hat
        diagnostics["linearized_curvature"] = -beta_half * i_xx

    return EstimatePair(theta_mle=theta_hat, theta_linearized=theta_tilde,
                        diagnostics=diagnostics)


def _horizon_step_counts(record: TrajectoryRecord, horizons: np.ndarray) -> np.ndarray:
    times = record.times
    if np.any(horizons <= 0.0) or np.any(np.diff(horizons) <= 0):
        raise DomainError("horizons must be positive and strictly increasing")
    if horizons[-1] > times[-1] + 1e-9 * max(1.0, times[-1]):
        raise DomainError(
            f"horizon {horizons[-1]} exceeds the recorded span {times[-1]}"
        )
    counts = np.searchsorted(times, horizons + 1e-12, side="right") - 1
    if np.any(counts < 1):
        raise DomainError("every horizon must cover at least one increment")
    return counts.astype(int)


def estimate_over_horizons(config: LikelihoodConfig, horizons,
                           kind: str = "mle") -> EstimateTrace:
    """One estimator recomputed on nested prefixes of the observation.

    kind is 'mle' (nonlinear normal equation) or 'linearized_mle'.  All
    path functionals are prefix sums, so the whole trace costs one pass
    over the trajectory; only the theta-in-V linear family re-solves its
    scalar root per horizon.  diagnostics holds the objective curvature at
    the estimate (negative = well conditioned), or the estimating-equation
    slope for the root-solved family.
    """
    if kind not in ("mle", "linearized_mle"):
        raise ConfigError(f"unknown estimator kind {kind!r}")
    horizons = np.atleast_1d(np.asarray(horizons, dtype=float))
    record = config.observation
    counts = _horizon_step_counts(record, horizons)
    t, x, dx, dt = _left_point_arrays(record)
    domain = config.theta_domain
    beta_half = 0.5 * config.beta

    def prefix(values: np.ndarray) -> np.ndarray:
        return np.cumsum(values)[counts - 1]

    i_xdx = prefix(x * dx)
    i_xx = prefix(x * x * dt)
    estimates = np.empty(horizons.size)
    diagnostics = np.empty(horizons.size)

    if config.tag in ("ou_theta_in_V", "ou_theta_in_W") and kind == "linearized_mle":
        for i in range(horizons.size):
            estimates[i] = _ratio_estimate(-i_xdx[i] - i_xx[i], i_xx[i], domain,
                                           f"{config.tag} linearized @T={horizons[i]:g}")
        diagnostics = -beta_half * i_xx

    elif config.tag == "ou_theta_in_V":
        for i, k in enumerate(counts):
            anchor = _ratio_estimate(-i_xdx[i] - i_xx[i], i_xx[i], domain,
                                     f"ou_theta_in_V anchor @T={horizons[i]:g}")
            estimates[i], diagnostics[i] = _solve_ou_v_root(config, anchor, int(k))

    elif config.tag == "ou_theta_in_W":
        m0 = _require_x0_mean(config)
        g_t = x - m0 * np.exp(-t)
        num = prefix(-g_t * dx - x * g_t * dt)
        den = prefix(g_t * g_t * dt)
        for i in range(horizons.size):
            estimates[i] = _ratio_estimate(num[i], den[i], domain,
                                           f"ou_theta_in_W exact @T={horizons[i]:g}")
        diagnostics = -beta_half * den

    elif config.tag == "bistable_theta_in_V":
        phi = x ** 3 - x
        den = prefix(phi * phi * dt)
        if kind == "mle":
            mean_t = _require_mean_curve(config)[:t.size]
            num = prefix(-phi * dx - (x - mean_t) * phi * dt)
        else:
            num = prefix(-phi * dx - x * phi * dt)
        for i in range(horizons.size):
            estimates[i] = _ratio_estimate(num[i], den[i], domain,
                                           f"bistable_theta_in_V {kind} @T={horizons[i]:g}")
        diagnostics = -beta_half * den

    else:  # bistable_theta_in_W
        phi = x ** 3 - x
        if kind == "mle":
            mean_t = _require_mean_curve(config)[:t.size]
            dev = x - mean_t
            num = prefix(-dev * dx - dev * phi * dt)
            den = prefix(dev * dev * dt)
        else:
            num = prefix(-x * dx - x * phi * dt)
            den = i_xx
        for i in range(horizons.size):
            estimates[i] = _ratio_estimate(num[i], den[i], domain,
                                           f"bistable_theta_in_W {kind} @T={horizons[i]:g}")
        diagnostics = -beta_half * den

    return EstimateTrace(horizons=horizons, estimates=estimates,
                         estimator_kind=kind, diagnostics=diagnostics)


def identifiability_profile(config: LikelihoodConfig, theta0: float,
                            n_scan: int = 200,
                            cache: Optional[EquilibriumCache] = None):
    """Scan of int (b(x;theta) - b(x;theta0))^2 f_inf(x;theta0) dx over theta.

    The frozen-mean drifts here are injective in theta, so the profile has
    a unique zero, at theta0: the parameter is identifiable from stationary
    observations.  The scan grid is snapped so theta0 is one of its points.
    Returns (thetas, gaps).
    """
    theta0 = _check_theta(config, theta0)
    if n_scan < 2:
        raise DomainError("n_scan must be at least 2")
    if cache is None:
        cache = EquilibriumCache(config.tag, config.beta, config.theta_domain)
    nodes = cache.nodes
    weight = cache.stationary_density(theta0)
    h = nodes[1] - nodes[0]
    base = cache.drift(theta0, nodes)
    thetas = np.linspace(config.theta_domain[0], config.theta_domain[1], n_scan)
    thetas[int(np.argmin(np.abs(thetas - theta0)))] = theta0
    gaps = np.empty(n_scan)
    for i, th in enumerate(thetas):
        diff = cache.drift(th, nodes) - base
        gaps[i] = h * float(np.sum(diff * diff * weight))
    return thetas, gaps
