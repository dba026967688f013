"""Euler-Maruyama simulation of the interacting particle system and of the
linearized (frozen-equilibrium) diffusion.

The particle system for n = 1..N:

    dX^n = -grad V(X^n) dt - (1/N) sum_i grad W(X^n - X^i) dt + sqrt(2/beta) dB^n

and the linearized process replaces the empirical interaction term by
grad W * f_inf for a fixed equilibrium density f_inf.  Both are driven by
per-particle Philox substreams (see rng.py); running the linearized process
with the same seed reproduces the Brownian path of particle slot 0 of the
particle run, which is exactly the synchronous coupling the pair runner
relies on.

Positions are kept unwrapped on the torus (the potentials are periodic, so
drifts are evaluated on wrapped copies); the wrapped view is derived.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import rng as _rng
from .errors import BlowUpError, ConfigError, DomainError
from .grids import DensityGrid, Line, Torus, torus_nodes
from .potentials import (
    Cosine,
    ModelSpec,
    Quadratic,
    Zero,
    conv_grad_density,
    grad_potential,
    interaction_drift_at_particles,
)

BLOWUP_LIMIT = 1e8
TAGGED_INDEX = 0  # the observed particle in every experiment

# memory budget for one (realizations, particles, block) noise slab
_NOISE_BUDGET = 2**23


@dataclass(frozen=True)
class SimConfig:
    """Time grid and ensemble sizes for one simulation run."""

    dt: float
    t_final: float
    n_particles: int
    n_realizations: int
    seed: int
    record_stride: int = 1

    def __post_init__(self):
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise ConfigError("dt must be positive")
        if not (np.isfinite(self.t_final) and self.t_final >= self.dt):
            raise ConfigError("t_final must be at least one step")
        if self.n_particles < 1 or self.n_realizations < 1:
            raise ConfigError("need at least one particle and one realization")
        if self.record_stride < 1 or self.record_stride != int(self.record_stride):
            raise ConfigError("record_stride must be a positive integer")
        steps = self.n_steps
        if abs(steps * self.dt - self.t_final) > 1e-9 * max(1.0, self.t_final):
            raise ConfigError("t_final must be an integer number of steps")
        if steps % self.record_stride != 0:
            raise ConfigError("record_stride must divide the step count")
        if not (0 <= int(self.seed) < 2**64):
            raise ConfigError("seed must fit in 64 bits")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_final / self.dt))

    @property
    def n_recorded(self) -> int:
        return self.n_steps // self.record_stride


@dataclass(frozen=True)
class PointMass:
    x0: float


@dataclass(frozen=True)
class GaussianInit:
    mean: float
    std: float


@dataclass(frozen=True)
class UniformTorus:
    pass


@dataclass
class ParticleEnsemble:
    """Positions of one realization at one instant.

    `positions` are unwrapped coordinates; on the torus the wrapped copy is
    exposed via `wrapped`.  `stream_ids` name the noise substream attached
    to each slot and travel with the particle under permutations.
    """

    positions: np.ndarray
    time: float
    stream_ids: np.ndarray

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=float)
        self.stream_ids = np.asarray(self.stream_ids, dtype=int)
        if self.positions.shape != self.stream_ids.shape:
            raise DomainError("positions and stream_ids must have matching shapes")

    @staticmethod
    def create(positions, time=0.0):
        positions = np.asarray(positions, dtype=float)
        return ParticleEnsemble(positions, time, np.arange(positions.size))

    def wrapped(self, spec: ModelSpec) -> np.ndarray:
        if isinstance(spec.domain, Torus):
            return spec.domain.wrap(self.positions)
        return self.positions.copy()


@dataclass
class TrajectoryRecord:
    """One recorded path: times, states, and the Brownian increments that
    produced it (aggregated over the record stride), kept for Girsanov
    functionals."""

    times: np.ndarray
    states: np.ndarray
    increments: Optional[np.ndarray] = None

    def __post_init__(self):
        dts = np.diff(self.times)
        if np.any(dts <= 0):
            raise DomainError("trajectory times must be strictly increasing")

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])


class LinearizedDrift:
    """Evaluates (grad W * f_inf)(x) efficiently for the linearized process.

    Quadratic and cosine interactions reduce to one or two moments of f_inf
    and are evaluated in closed form; any other kind is sampled on a fine
    grid once and linearly interpolated (periodically on the torus).
    """

    def __init__(self, spec: ModelSpec, f_inf: DensityGrid, n_fine: int = 4096):
        self.spec = spec
        kind = spec.interaction
        self._mode = "generic"
        if isinstance(kind, Zero):
            self._mode = "zero"
        elif isinstance(kind, Quadratic) and isinstance(spec.domain, Line):
            self._mode = "affine"
            self._a = kind.a
            self._mean = f_inf.mean()
        elif isinstance(kind, Cosine):
            self._mode = "trig"
            self._a = kind.a
            self._c1 = f_inf.integrate(np.cos(2.0 * np.pi * f_inf.x) * f_inf.values)
            self._s1 = f_inf.integrate(np.sin(2.0 * np.pi * f_inf.x) * f_inf.values)
        else:
            if isinstance(spec.domain, Torus):
                xs = torus_nodes(n_fine)
            else:
                xs = f_inf.x
            self._xs = xs
            self._ys = np.atleast_1d(conv_grad_density(spec, f_inf, xs))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self._mode == "zero":
            return np.zeros_like(x)
        if self._mode == "affine":
            return self._a * (x - self._mean)
        if self._mode == "trig":
            two_pi_x = 2.0 * np.pi * x
            return 2.0 * np.pi * self._a * (np.sin(two_pi_x) * self._c1 - np.cos(two_pi_x) * self._s1)
        if isinstance(self.spec.domain, Torus):
            xq = self.spec.domain.wrap(x)
            period = self.spec.domain.period
            return np.interp(xq, self._xs, self._ys, period=period)
        return np.interp(x, self._xs, self._ys)


def _confining_drift(spec: ModelSpec, x: np.ndarray) -> np.ndarray:
    return -grad_potential(spec, x, "confining")


def particle_drift(spec: ModelSpec, positions: np.ndarray) -> np.ndarray:
    """Full drift of the particle system at the given (..., N) positions."""
    return _confining_drift(spec, positions) - interaction_drift_at_particles(spec, positions)


def linearized_drift_value(spec: ModelSpec, drift: LinearizedDrift, x: np.ndarray) -> np.ndarray:
    return _confining_drift(spec, x) - drift(x)


def _check_sane(x: np.ndarray, time: float):
    worst = float(np.max(np.abs(x)))
    if not worst <= BLOWUP_LIMIT:  # NaN fails this comparison too
        bad = ~np.isfinite(x) | (np.abs(x) > BLOWUP_LIMIT)
        idx = np.argwhere(bad)[0]
        raise BlowUpError(
            f"particle {int(idx[-1])} left the sane range at t = {time:.6g}",
            particle_index=int(idx[-1]),
            time=time,
        )


def step_particle_system(
    spec: ModelSpec, ensemble: ParticleEnsemble, dt: float, noise: np.ndarray, noise_scale: float = 1.0
) -> ParticleEnsemble:
    """One explicit Euler-Maruyama step of the full particle system.

    `noise` holds one standard normal per particle; the diffusion amplitude
    can be forced to zero through `noise_scale` for deterministic tests.
    """
    x = ensemble.positions
    sig = noise_scale * np.sqrt(2.0 * dt / spec.beta)
    x_new = x + particle_drift(spec, x) * dt + sig * np.asarray(noise, dtype=float)
    t_new = ensemble.time + dt
    _check_sane(x_new, t_new)
    return ParticleEnsemble(x_new, t_new, ensemble.stream_ids.copy())


def step_linearized(
    spec: ModelSpec,
    drift: LinearizedDrift,
    state: np.ndarray,
    dt: float,
    noise: np.ndarray,
    noise_scale: float = 1.0,
) -> np.ndarray:
    """One Euler-Maruyama step of the linearized diffusion (vectorized)."""
    sig = noise_scale * np.sqrt(2.0 * dt / spec.beta)
    out = state + linearized_drift_value(spec, drift, state) * dt + sig * np.asarray(noise, dtype=float)
    return out


@dataclass
class EnsembleResult:
    """Output of run_ensemble: recorded tagged paths, ensemble means, final
    positions, and (optionally) Brownian increments and full snapshots."""

    spec: ModelSpec
    config: SimConfig
    mode: str
    times: np.ndarray                      # (n_recorded + 1,)
    tagged: np.ndarray                     # (R, n_recorded + 1), unwrapped
    mean_curve: np.ndarray                 # (R, n_recorded + 1)
    final_positions: np.ndarray            # (R, N), unwrapped
    increments: Optional[np.ndarray]       # (R, n_recorded) Brownian, tagged slot
    snapshots: Optional[np.ndarray]        # (R, n_recorded + 1, N)

    def trajectory(self, realization: int = 0) -> TrajectoryRecord:
        inc = None if self.increments is None else self.increments[realization]
        return TrajectoryRecord(self.times, self.tagged[realization], inc)

    def wrapped_final(self) -> np.ndarray:
        if isinstance(self.spec.domain, Torus):
            return self.spec.domain.wrap(self.final_positions)
        return self.final_positions.copy()


def _initial_block(init, gens, n_realizations, n_particles):
    x0 = np.empty((n_realizations, n_particles))
    if isinstance(init, PointMass):
        x0.fill(init.x0)
        return x0
    for r in range(n_realizations):
        for i in range(n_particles):
            g = gens[r][i]
            if isinstance(init, GaussianInit):
                x0[r, i] = init.mean + init.std * g.standard_normal()
            elif isinstance(init, UniformTorus):
                x0[r, i] = g.random()
            else:
                raise ConfigError(f"unknown initial condition {init!r}")
    return x0


def _run_chunk(
    spec,
    config,
    mode,
    drift_lin,
    init,
    realization_ids,
    noise_scale,
    record_increments,
    store_snapshots,
    initial_override,
):
    n = config.n_particles
    steps = config.n_steps
    stride = config.record_stride
    n_rec = steps // stride
    r_count = len(realization_ids)

    gens = _rng.substream_block(config.seed, realization_ids, range(n))
    if initial_override is not None:
        x = np.array(initial_override[realization_ids, :], dtype=float)
    else:
        x = _initial_block(init, gens, r_count, n)

    tagged = np.empty((r_count, n_rec + 1))
    mean_curve = np.empty((r_count, n_rec + 1))
    increments = np.zeros((r_count, n_rec)) if record_increments else None
    snapshots = np.empty((r_count, n_rec + 1, n)) if store_snapshots else None

    tagged[:, 0] = x[:, TAGGED_INDEX]
    mean_curve[:, 0] = x.mean(axis=1)
    if snapshots is not None:
        snapshots[:, 0, :] = x

    sig = noise_scale * np.sqrt(2.0 * config.dt / spec.beta)
    sqrt_dt = np.sqrt(config.dt)
    block = max(1, min(2048, _NOISE_BUDGET // max(1, r_count * n), steps))

    step = 0
    t = 0.0
    while step < steps:
        b = min(block, steps - step)
        noise = _rng.normal_block(gens, b)
        for j in range(b):
            xi = noise[:, :, j]
            if mode == "particle_system":
                x = x + particle_drift(spec, x) * config.dt + sig * xi
            else:
                x = x + linearized_drift_value(spec, drift_lin, x) * config.dt + sig * xi
            step += 1
            t = step * config.dt
            _check_sane(x, t)
            if record_increments:
                increments[:, (step - 1) // stride] += sqrt_dt * xi[:, TAGGED_INDEX]
            if step % stride == 0:
                k = step // stride
                tagged[:, k] = x[:, TAGGED_INDEX]
                mean_curve[:, k] = x.mean(axis=1)
                if snapshots is not None:
                    snapshots[:, k, :] = x
    return x, tagged, mean_curve, increments, snapshots


def run_ensemble(
    spec: ModelSpec,
    config: SimConfig,
    mode: str = "particle_system",
    f_inf: Optional[DensityGrid] = None,
    init=PointMass(0.0),
    noise_scale: float = 1.0,
    record_increments: bool = False,
    store_snapshots: bool = False,
    initial_override: Optional[np.ndarray] = None,
    threads: int = 1,
) -> EnsembleResult:
    """Simulate all realizations of the configured ensemble.

    mode is "particle_system" or "linearized"; the latter requires f_inf and
    treats each particle slot as an independent copy of the linearized
    diffusion.  Results are bit-identical for a given (spec, config, init)
    regardless of `threads` or chunking, because every particle slot draws
    from its own counter-based substream.
    """
    if mode not in ("particle_system", "linearized"):
        raise ConfigError(f"unknown mode {mode!r}")
    drift_lin = None
    if mode == "linearized":
        if f_inf is None:
            raise ConfigError("linearized mode requires the equilibrium density f_inf")
        drift_lin = LinearizedDrift(spec, f_inf)
    if initial_override is not None:
        initial_override = np.asarray(initial_override, dtype=float)
        if initial_override.shape != (config.n_realizations, config.n_particles):
            raise ConfigError("initial_override must have shape (n_realizations, n_particles)")

    r_total = config.n_realizations
    n_rec = config.n_recorded
    times = np.arange(n_rec + 1) * (config.dt * config.record_stride)
    tagged = np.empty((r_total, n_rec + 1))
    mean_curve = np.empty((r_total, n_rec + 1))
    final_positions = np.empty((r_total, config.n_particles))
    increments = np.zeros((r_total, n_rec)) if record_increments else None
    snapshots = np.empty((r_total, n_rec + 1, config.n_particles)) if store_snapshots else None

    # chunk realizations so one noise slab stays inside the memory budget
    chunk = max(1, min(r_total, _NOISE_BUDGET // max(1, config.n_particles * 256)))
    spans = [(lo, min(lo + chunk, r_total)) for lo in range(0, r_total, chunk)]

    def work(span):
        lo, hi = span
        return span, _run_chunk(
            spec, config, mode, drift_lin, init, list(range(lo, hi)),
            noise_scale, record_increments, store_snapshots, initial_override,
        )

    if threads > 1 and len(spans) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, spans))
    else:
        results = [work(s) for s in spans]

    for (lo, hi), (x, tg, mc, inc, snap) in results:
        final_positions[lo:hi] = x
        tagged[lo:hi] = tg
        mean_curve[lo:hi] = mc
        if increments is not None:
            increments[lo:hi] = inc
        if snapshots is not None:
            snapshots[lo:hi] = snap

    return EnsembleResult(
        spec=spec,
        config=config,
        mode=mode,
        times=times,
        tagged=tagged,
        mean_curve=mean_curve,
        final_positions=final_positions,
        increments=increments,
        snapshots=snapshots,
    )


def simulate_coupled_pair(
    spec: ModelSpec,
    f_inf: DensityGrid,
    config: SimConfig,
    init=PointMass(0.0),
) -> tuple:
    """Synchronously coupled (particle system, linearized) pair.

    The tagged slot of the particle run and the linearized process share the
    same substream, hence the same Brownian increments, realization by
    realization.  Returns (particle EnsembleResult, linearized EnsembleResult).
    """
    part = run_ensemble(spec, config, mode="particle_system", init=init, record_increments=True)
    lin_config = SimConfig(
        dt=config.dt,
        t_final=config.t_final,
        n_particles=1,
        n_realizations=config.n_realizations,
        seed=config.seed,
        record_stride=config.record_stride,
    )
    lin = run_ensemble(
        spec, lin_config, mode="linearized", f_inf=f_inf, init=init, record_increments=True
    )
    return part, lin
