"""Closed-form decay envelopes for the distance between the interacting law
and its linearization, and the constants entering them.

Two geometries.  On the line with uniformly convex potentials the relative
entropy between the two laws is dominated by rho_lambda(t), built from the
convexity constants (alpha, gamma), a time-uniform log-Sobolev constant
Lambda, a moment bound M and an L1 decay prefactor K.  On the torus with
bounded potentials the same role is played by sigma_xi(t), built from the
density sandwich factor Gamma, the L2 and entropy decay rates zeta and eta,
and a log-Sobolev constant Xi.  Wasserstein envelopes follow by transport
inequalities, and the pathwise mean-square coupling envelope decays at the
confining rate alpha/2.

M and K are only asserted to exist by the theory; estimate_moment_bound and
estimate_l1_prefactor measure them from solver output with a safety factor.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigError, DomainError
from .grids import DensityGrid, Torus
from .potentials import ModelSpec, _conv_on_grid, sup_norms_torus
from .special import lambert_w_at_one

# relative slack for deciding that a rate parameter sits exactly on the
# boundary between two case branches
CASE_RTOL = 1e-12


@dataclass(frozen=True)
class BoundParams:
    """Constants feeding the envelopes.

    alpha, gamma: uniform convexity of the confining and interaction
    potentials.  lambda0: log-Sobolev constant of the initial laws.
    moment_bound: M, the uniform-in-time second moment of grad W against the
    evolving and stationary densities.  decay_prefactor: K in the L1 decay
    K e^{-alpha t / 2}.  entropy0: relative entropy between the two initial
    laws.  kappa: initial density sandwich 1/kappa <= f_0 <= kappa (torus).
    l2_init and h_init are the initial L2 distance and relative entropy to
    the invariant density, which set the torus prefactors c1 and c2.

    Sup norms may be left as None and measured from the model on demand.
    """

    alpha: float
    gamma: float = 0.0
    lambda0: float = 1.0
    moment_bound: float = 0.0
    decay_prefactor: float = 0.0
    entropy0: float = 0.0
    kappa: float = 2.0
    l2_init: float = 0.0
    h_init: float = 0.0
    sup_v: Optional[float] = None
    sup_w: Optional[float] = None
    sup_grad_v: Optional[float] = None
    sup_grad_w: Optional[float] = None
    sup_lap_w: Optional[float] = None

    def __post_init__(self):
        if not self.alpha > 0:
            raise ConfigError(f"alpha must be positive, got {self.alpha}")
        if self.gamma < 0:
            raise ConfigError(f"gamma must be nonnegative, got {self.gamma}")
        if not self.lambda0 > 0:
            raise ConfigError(f"lambda0 must be positive, got {self.lambda0}")
        if not self.kappa > 1:
            raise ConfigError(f"kappa must exceed 1, got {self.kappa}")
        for name in ("moment_bound", "decay_prefactor", "entropy0", "l2_init", "h_init"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be nonnegative")


@dataclass
class BoundCurve:
    """An envelope evaluated on a time grid, tagged with the active case."""

    times: np.ndarray
    values: np.ndarray
    regime_tag: str

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.times.shape != self.values.shape:
            raise ConfigError("times and values must have matching shapes")
        if self.times.size > 1 and not np.all(np.diff(self.times) > 0):
            raise ConfigError("times must be strictly increasing")
        if not np.all(np.isfinite(self.values)) or np.any(self.values < 0):
            raise ConfigError("envelope values must be finite and nonnegative")


def lsi_lambda_t(params: BoundParams, beta: float, t) -> float:
    """Log-Sobolev constant at time t: a convex combination of lambda0 and
    the stationary value 1/(2 beta (alpha + gamma))."""
    rate = params.alpha + params.gamma
    if rate <= 0:
        raise DomainError("alpha + gamma must be positive")
    decay = np.exp(-2.0 * rate * np.asarray(t, dtype=float))
    lam = params.lambda0 * decay + (1.0 - decay) / (2.0 * beta * rate)
    return float(lam) if np.isscalar(t) else lam


def lsi_constant_whole(params: BoundParams, beta: float) -> float:
    """Time-uniform log-Sobolev constant Lambda on the line."""
    rate = params.alpha + params.gamma
    if rate <= 0:
        raise DomainError("alpha + gamma must be positive")
    return max(params.lambda0, 1.0 / (2.0 * beta * rate))


def _classify(value: float, threshold: float) -> int:
    """-1, 0, +1 for below / at / above the case boundary."""
    if abs(value - threshold) <= CASE_RTOL * max(abs(value), abs(threshold)):
        return 0
    return -1 if value < threshold else 1


def _three_case(t, h0, slow_rate, fast_rate, linear_coef, transient_coef, side):
    """Shared algebra of the entropy envelopes.

    side < 0: (h0 + transient) e^{-slow_rate t};
    side = 0: (h0 + linear_coef t) e^{-fast_rate t};
    side > 0: (h0 + transient) e^{-fast_rate t}.
    """
    t = np.asarray(t, dtype=float)
    if side == 0:
        return (h0 + linear_coef * t) * np.exp(-fast_rate * t)
    rate = slow_rate if side < 0 else fast_rate
    return (h0 + transient_coef) * np.exp(-rate * t)


def rho_lambda(params: BoundParams, beta: float, t):
    """Relative entropy envelope on the line.

    The branch is set by Lambda against 4/(alpha beta): below it the decay
    rate is alpha/2 with transient beta^2 M K Lambda / (4 - alpha beta
    Lambda); above it the rate is 2/(beta Lambda) with the sign-flipped
    transient; exactly at it the transient grows linearly in t.
    """
    lam = lsi_constant_whole(params, beta)
    side = _classify(lam, 4.0 / (params.alpha * beta))
    mk = params.moment_bound * params.decay_prefactor
    transient = 0.0
    if side != 0 and mk != 0.0:
        transient = beta**2 * mk * lam / abs(4.0 - params.alpha * beta * lam)
    out = _three_case(
        t,
        params.entropy0,
        slow_rate=0.5 * params.alpha,
        fast_rate=2.0 / (beta * lam),
        linear_coef=0.5 * beta * mk,
        transient_coef=transient,
        side=side,
    )
    return float(out) if np.isscalar(t) else out


def rho_lambda_curve(params: BoundParams, beta: float, times) -> BoundCurve:
    lam = lsi_constant_whole(params, beta)
    side = _classify(lam, 4.0 / (params.alpha * beta))
    tag = {-1: "convexity-rate", 0: "critical", 1: "lsi-rate"}[side]
    return BoundCurve(np.asarray(times, dtype=float), rho_lambda(params, beta, times), tag)


def coupling_envelope(params: BoundParams, beta: float, e0: float, t):
    """Mean-square distance between synchronously coupled paths:
    (E|X_0 - Y_0|^2 + 8MK/(3 alpha + 4 gamma)^2) e^{-alpha t / 2}."""
    if e0 < 0:
        raise DomainError("initial mean-square distance must be nonnegative")
    mk = params.moment_bound * params.decay_prefactor
    const = e0 + 8.0 * mk / (3.0 * params.alpha + 4.0 * params.gamma) ** 2
    out = const * np.exp(-0.5 * params.alpha * np.asarray(t, dtype=float))
    return float(out) if np.isscalar(t) else out


def wasserstein_envelope(lsi_const: float, bound_value: float) -> float:
    """W2 envelope from a transport inequality: sqrt(constant * entropy bound)."""
    if lsi_const < 0 or bound_value < 0:
        raise DomainError("transport envelope needs nonnegative inputs")
    return float(np.sqrt(lsi_const * bound_value))


def _required_sups(spec: ModelSpec, params: BoundParams) -> dict:
    overrides = {
        "v": params.sup_v,
        "w": params.sup_w,
        "grad_v": params.sup_grad_v,
        "grad_w": params.sup_grad_w,
        "lap_w": params.sup_lap_w,
    }
    if all(v is not None for v in overrides.values()):
        return overrides
    sv = sup_norms_torus(spec.confining)
    sw = sup_norms_torus(spec.interaction)
    measured = {
        "v": sv["value"],
        "w": sw["value"],
        "grad_v": sv["grad"],
        "grad_w": sw["grad"],
        "lap_w": sw["laplacian"],
    }
    return {k: (overrides[k] if overrides[k] is not None else measured[k]) for k in measured}


def torus_constants(spec: ModelSpec, params: BoundParams) -> dict:
    """All torus-side constants, plus applicability flags for the perturbed
    log-Sobolev constants.

    Gamma sandwiches the invariant density; zeta and eta are the L2 and
    entropy decay rates (positive only at high temperature); a1 = zeta and
    a2 = eta/2 drive the L1 decay with prefactors c1 (initial L2 distance)
    and c2 = 2 sqrt(2 h_init).  Xi is the log-Sobolev constant of the
    linearized law; Xi_tilde_i covers the interacting law and exists only
    when a_i > 0 and C_i/a_i stays below the Lambert threshold W(1), and is
    None otherwise (the flags record which side each i landed on).
    """
    if not isinstance(spec.domain, Torus):
        raise DomainError("torus constants need a torus model")
    beta = spec.beta
    sups = _required_sups(spec, params)
    gamma_env = float(np.exp(2.0 * beta * (sups["v"] + sups["w"])))
    grad_sum = sups["grad_v"] + (1.0 + gamma_env) * sups["grad_w"]
    zeta = np.pi**2 / (4.0 * beta) - beta * grad_sum**2
    eta = 8.0 * (
        np.pi**2 / (beta * gamma_env)
        - sups["lap_w"]
        - beta * sups["grad_w"] * (sups["grad_v"] + sups["grad_w"])
    )
    c1 = params.l2_init
    c2 = 2.0 * np.sqrt(2.0 * params.h_init)
    perturb = sups["lap_w"] + beta * sups["grad_w"] * (sups["grad_v"] + sups["grad_w"])
    out = {
        "Gamma": gamma_env,
        "lsi_invariant": gamma_env / (2.0 * np.pi**2),
        "zeta": float(zeta),
        "eta": float(eta),
        "a1": float(zeta),
        "a2": float(eta / 2.0),
        "c1": float(c1),
        "c2": float(c2),
        "C1": float(c1 * perturb),
        "C2": float(c2 * perturb),
        "Xi": params.kappa * gamma_env**2 / (2.0 * np.pi**2),
        "sup_grad_w": float(sups["grad_w"]),
    }
    w1 = lambert_w_at_one()
    for i in (1, 2):
        a, big_c = out[f"a{i}"], out[f"C{i}"]
        ok = a > 0 and big_c / a < w1
        out[f"Xi_tilde_{i}_valid"] = ok
        if ok:
            ratio = big_c / a
            out[f"Xi_tilde_{i}"] = out["Xi"] / (1.0 - ratio * np.exp(ratio))
        else:
            out[f"Xi_tilde_{i}"] = None
    return out


def sigma_xi(constants: dict, beta: float, h0: float, i: int, t):
    """Relative entropy envelope on the torus, for the L1-decay route i.

    The branch is set by Xi against 2/(a_i beta): below it the decay rate is
    a_i with transient beta^2 c_i Xi |grad W|^2 / (2(2 - beta a_i Xi));
    above it the rate is 2/(beta Xi); exactly at it the transient grows
    linearly in t.
    """
    if i not in (1, 2):
        raise DomainError(f"route index must be 1 or 2, got {i}")
    if h0 < 0:
        raise DomainError("initial relative entropy must be nonnegative")
    a = constants[f"a{i}"]
    c = constants[f"c{i}"]
    xi = constants["Xi"]
    gw = constants["sup_grad_w"]
    if a <= 0:
        raise DomainError(f"decay rate a{i} = {a:.4g} is not positive; envelope not applicable")
    side = _classify(xi, 2.0 / (a * beta))
    transient = 0.0
    if side != 0 and c * gw != 0.0:
        transient = beta**2 * c * xi * gw**2 / (2.0 * abs(2.0 - beta * a * xi))
    out = _three_case(
        t,
        h0,
        slow_rate=a,
        fast_rate=2.0 / (beta * xi),
        linear_coef=0.5 * beta * c * gw**2,
        transient_coef=transient,
        side=side,
    )
    return float(out) if np.isscalar(t) else out


def sigma_xi_curve(constants: dict, beta: float, h0: float, i: int, times) -> BoundCurve:
    a = constants[f"a{i}"]
    side = _classify(constants["Xi"], 2.0 / (a * beta))
    tag = {-1: "l1-rate", 0: "critical", 1: "lsi-rate"}[side]
    return BoundCurve(np.asarray(times, dtype=float), sigma_xi(constants, beta, h0, i, times), tag)


def estimate_moment_bound(spec: ModelSpec, densities, f_inf: DensityGrid, safety: float = 1.2) -> float:
    """Measure M = sup_t int int |grad W(x-z)|^2 (f_t(z) + f_inf(z)) f_t(x),
    over the supplied density snapshots, with a safety factor."""
    if safety < 1:
        raise ConfigError("safety factor must be >= 1")

    def kernel(d):
        return np.square(np.asarray(spec.interaction.grad(d), dtype=float))

    conv_inf = _conv_on_grid(spec, f_inf, kernel)
    worst = 0.0
    seen = 0
    for f in densities:
        f.require_same_grid(f_inf)
        val = f.integrate((_conv_on_grid(spec, f, kernel) + conv_inf) * f.values)
        worst = max(worst, val)
        seen += 1
    if seen == 0:
        raise ConfigError("moment bound needs at least one density snapshot")
    return safety * worst


def estimate_l1_prefactor(times, l1_values, alpha: float, safety: float = 1.2) -> float:
    """Measure K so that the recorded L1 distances sit below K e^{-alpha t/2},
    with a safety factor."""
    times = np.asarray(times, dtype=float)
    l1_values = np.asarray(l1_values, dtype=float)
    if times.shape != l1_values.shape or times.size == 0:
        raise ConfigError("times and L1 values must be nonempty with matching shapes")
    if np.any(l1_values < 0):
        raise DomainError("L1 distances must be nonnegative")
    if safety < 1:
        raise ConfigError("safety factor must be >= 1")
    return safety * float(np.max(l1_values * np.exp(0.5 * alpha * times)))
