"""Config-driven experiment runner.

``meanfield run config.json`` executes one experiment described by a small
versioned JSON document and writes CSV/JSON artifacts plus a manifest of
content hashes.  Artifacts are deterministic in (config, seed): reruns hash
equal no matter how many threads are used.

Exit codes: 0 success, 1 runtime failure, 2 config rejected.  The config is
validated in full before anything touches the filesystem, so a rejected
config never leaves partial artifacts behind.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import io
from .bounds import (
    BoundParams,
    coupling_envelope,
    estimate_l1_prefactor,
    estimate_moment_bound,
    lsi_constant_whole,
    rho_lambda_curve,
    sigma_xi_curve,
    torus_constants,
)
from .equilibrium import DEFAULT_GRID_TORUS, solve_bessel_selfconsistency, solve_kirkwood_monroe
from .errors import ConfigError, MeanFieldError
from .fokker_planck import evolve_pair_and_track, fitted_decay_rate, max_stable_dt
from .grids import DensityGrid, Line, Torus, line_nodes, torus_nodes
from .homogenization import clt_diagnostic, solve_cell_problem
from .inference import LikelihoodConfig, build_family_spec, estimate_over_horizons
from .potentials import Bistable, Cosine, ModelSpec, Quadratic, Zero, uniform_convexity
from .simulate import PointMass, SimConfig, run_ensemble

SCHEMA_VERSION = 1

_MLE_TAGS = {
    "mle_ou": "ou_theta_in_V",
    "mle_bistable": "bistable_theta_in_V",
    "mle_interaction": "bistable_theta_in_W",
}
# Desk scale trades trajectory length and ensemble size for runtime; the
# full-size settings sit behind --paper-scale.
_MLE_DESK = {"dt": 1e-3, "t_final": 300.0, "n_particles": 200}
_MLE_PAPER = {"dt": 1e-3, "t_final": 1000.0, "n_particles": 500}
_CLT_DESK = {"dt": 1e-2, "t_final": 400.0, "n_particles": 128, "n_realizations": 200}
_CLT_PAPER = {"dt": 1e-2, "t_final": 1000.0, "n_particles": 250, "n_realizations": 500}

_HORIZON_BASE = (
    2.0, 5.0, 10.0, 20.0, 30.0, 50.0, 75.0, 100.0,
    150.0, 200.0, 250.0, 300.0, 400.0, 500.0, 650.0, 800.0, 1000.0,
)

_POTENTIAL_KINDS = {"quadratic": Quadratic, "bistable": Bistable, "cosine": Cosine, "zero": Zero}


# ---------------------------------------------------------------------------
# schema validation

def _where(path: str) -> str:
    return path if path else "config"


def _require_mapping(node, path: str) -> dict:
    if not isinstance(node, dict):
        raise ConfigError(f"{_where(path)}: expected an object, got {type(node).__name__}")
    return node


def _check_keys(node: dict, allowed, path: str) -> None:
    unknown = sorted(set(node) - set(allowed))
    if unknown:
        raise ConfigError(f"{_where(path)}: unknown key(s) {', '.join(unknown)}; "
                          f"allowed: {', '.join(sorted(allowed))}")


def _number(node: dict, key: str, path: str, default=None, minimum=None,
            positive: bool = False, integer: bool = False):
    if key not in node:
        if default is None:
            raise ConfigError(f"{_where(path)}: missing required key '{key}'")
        return default
    v = node[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{path}.{key}: expected a number, got {v!r}")
    if integer and not isinstance(v, int):
        raise ConfigError(f"{path}.{key}: expected an integer, got {v!r}")
    if positive and not v > 0:
        raise ConfigError(f"{path}.{key}: must be positive, got {v!r}")
    if minimum is not None and v < minimum:
        raise ConfigError(f"{path}.{key}: must be >= {minimum}, got {v!r}")
    if not np.isfinite(v):
        raise ConfigError(f"{path}.{key}: must be finite")
    return v


def _potential_from(node, path: str):
    node = _require_mapping(node, path)
    kind = node.get("type")
    if kind not in _POTENTIAL_KINDS:
        raise ConfigError(f"{path}.type: expected one of {sorted(_POTENTIAL_KINDS)}, got {kind!r}")
    if kind == "zero":
        _check_keys(node, {"type"}, path)
        return Zero()
    _check_keys(node, {"type", "a"}, path)
    return _POTENTIAL_KINDS[kind](_number(node, "a", path))


def _spec_from_model(model: dict, path: str) -> ModelSpec:
    dom_node = _require_mapping(model.get("domain"), f"{path}.domain")
    dom_kind = dom_node.get("type")
    if dom_kind == "torus":
        _check_keys(dom_node, {"type"}, f"{path}.domain")
        domain = Torus()
    elif dom_kind == "line":
        _check_keys(dom_node, {"type", "halfwidth"}, f"{path}.domain")
        domain = Line(_number(dom_node, "halfwidth", f"{path}.domain", positive=True))
    else:
        raise ConfigError(f"{path}.domain.type: expected 'torus' or 'line', got {dom_kind!r}")
    beta = _number(model, "beta", path, default=1.0, positive=True)
    if "confining" not in model or "interaction" not in model:
        raise ConfigError(f"{_where(path)}: bounds_report needs 'confining' and 'interaction'")
    confining = _potential_from(model["confining"], f"{path}.confining")
    interaction = _potential_from(model["interaction"], f"{path}.interaction")
    return ModelSpec(domain, beta, confining, interaction)


_BOUND_KEYS = ("alpha", "gamma", "lambda0", "kappa", "moment_bound",
               "decay_prefactor", "entropy0", "l2_init", "h_init", "e0")

_MODEL_KEYS = {
    "mle_ou": {"theta0", "beta", "x0"},
    "mle_bistable": {"theta0", "beta", "x0"},
    "mle_interaction": {"theta0", "beta", "x0"},
    "clt_torus": {"xi", "beta"},
    "entropy_decay_line": set(),
    "entropy_decay_torus": set(),
    "bounds_report": {"domain", "beta", "confining", "interaction", "bounds"},
}

_SIM_KEYS = {
    "mle_ou": {"dt", "t_final", "n_particles", "record_stride"},
    "mle_bistable": {"dt", "t_final", "n_particles", "record_stride"},
    "mle_interaction": {"dt", "t_final", "n_particles", "record_stride"},
    "clt_torus": {"dt", "t_final", "n_particles", "n_realizations", "record_stride"},
    "entropy_decay_line": {"t_final", "record_every"},
    "entropy_decay_torus": {"t_final", "record_every"},
    "bounds_report": set(),
}


def validate_config(doc, source: str = "config") -> dict:
    """Full schema check; raises ConfigError naming the offending key."""
    doc = _require_mapping(doc, "")
    _check_keys(doc, {"schema_version", "experiment", "seed", "output_dir", "model", "sim"}, "")
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ConfigError(f"schema_version: expected {SCHEMA_VERSION}, got {version!r}")
    experiment = doc.get("experiment")
    if experiment not in _RUNNERS:
        raise ConfigError(f"experiment: expected one of {sorted(_RUNNERS)}, got {experiment!r}")
    seed = _number(doc, "seed", "", minimum=0, integer=True)
    if seed >= 2**64:
        raise ConfigError(f"seed: must be below 2**64, got {seed}")
    if "output_dir" in doc and not isinstance(doc["output_dir"], str):
        raise ConfigError("output_dir: expected a string")

    model = _require_mapping(doc.get("model", {}), "model")
    _check_keys(model, _MODEL_KEYS[experiment], "model")
    if experiment in _MLE_TAGS:
        _number(model, "theta0", "model", default=1.0, positive=True)
        _number(model, "beta", "model", default=1.0, positive=True)
        _number(model, "x0", "model", default=1.0)
    elif experiment == "clt_torus":
        _number(model, "xi", "model", default=0.5, minimum=0.0)
        _number(model, "beta", "model", default=1.0, positive=True)
    elif experiment == "bounds_report":
        spec = _spec_from_model(model, "model")
        bounds = _require_mapping(model.get("bounds", {}), "model.bounds")
        _check_keys(bounds, _BOUND_KEYS, "model.bounds")
        for key in bounds:
            _number(bounds, key, "model.bounds")
        # construct once here so bad bound values reject before any output
        _bound_params(spec, bounds)

    sim = _require_mapping(doc.get("sim", {}), "sim")
    _check_keys(sim, _SIM_KEYS[experiment], "sim")
    _number(sim, "dt", "sim", default=1.0, positive=True)
    _number(sim, "t_final", "sim", default=1.0, positive=True)
    _number(sim, "n_particles", "sim", default=1, minimum=1, integer=True)
    _number(sim, "n_realizations", "sim", default=50, minimum=50, integer=True)
    _number(sim, "record_stride", "sim", default=1, minimum=1, integer=True)
    _number(sim, "record_every", "sim", default=1, minimum=1, integer=True)
    return doc


# ---------------------------------------------------------------------------
# experiment runners

def _horizon_grid(t_final: float) -> np.ndarray:
    grid = [h for h in _HORIZON_BASE if h < t_final * (1.0 - 1e-12)]
    grid.append(float(t_final))
    return np.asarray(grid)


def _auto_stride(steps: int, target_frames: int = 80) -> int:
    # largest divisor of steps keeping at least ~target_frames records
    cap = max(1, steps // target_frames)
    for s in range(min(steps, cap), 0, -1):
        if steps % s == 0:
            return s
    return 1


def _run_mle(experiment: str, doc: dict, out: Path, seed: int,
             paper_scale: bool, threads: int) -> dict:
    tag = _MLE_TAGS[experiment]
    model = doc.get("model", {})
    theta0 = model.get("theta0", 1.0)
    beta = model.get("beta", 1.0)
    x0 = model.get("x0", 1.0)
    base = dict(_MLE_PAPER if paper_scale else _MLE_DESK)
    base.update(doc.get("sim", {}))

    spec = build_family_spec(tag, theta0, beta=beta)
    config = SimConfig(
        dt=base["dt"],
        t_final=base["t_final"],
        n_particles=base["n_particles"],
        n_realizations=1,
        seed=seed,
        record_stride=base.get("record_stride", 1),
    )
    horizons = _horizon_grid(config.t_final)

    result = run_ensemble(spec, config, mode="particle_system",
                          init=PointMass(x0), threads=threads)
    observation = result.trajectory(0)
    likelihood = LikelihoodConfig(
        tag=tag,
        observation=observation,
        beta=beta,
        x0_mean=x0 if tag.startswith("ou") else None,
        mean_curve=result.mean_curve[0] if tag.startswith("bistable") else None,
    )
    trace_mle = estimate_over_horizons(likelihood, horizons, kind="mle")
    trace_lin = estimate_over_horizons(likelihood, horizons, kind="linearized_mle")

    files = []
    path = out / "estimate_trace.csv"
    io.write_trace_csv(path, trace_mle, trace_lin)
    files.append(path)
    # thinned copy of the observed path; estimators above used every step
    thin = max(1, observation.times.size // 2001)
    path = out / "observation.csv"
    io.write_long_csv(path, observation.times[::thin], result.tagged[:1, ::thin])
    files.append(path)

    summary = {
        "theta0": float(theta0),
        "horizon_final": float(horizons[-1]),
        "theta_hat_final": float(trace_mle.estimates[-1]),
        "theta_tilde_final": float(trace_lin.estimates[-1]),
    }
    io.write_manifest(out, experiment, seed, extra=summary, files=files)
    print(f"{experiment}: theta_hat={summary['theta_hat_final']:.4f} "
          f"theta_tilde={summary['theta_tilde_final']:.4f} at T={horizons[-1]:g}")
    return summary


def _variance_se(samples: np.ndarray) -> float:
    # Gaussian-limit standard error of the sample variance
    s2 = float(np.var(samples, ddof=1))
    return s2 * np.sqrt(2.0 / (samples.size - 1))


def _run_clt(experiment: str, doc: dict, out: Path, seed: int,
             paper_scale: bool, threads: int) -> dict:
    model = doc.get("model", {})
    xi = model.get("xi", 0.5)
    beta = model.get("beta", 1.0)
    base = dict(_CLT_PAPER if paper_scale else _CLT_DESK)
    base.update(doc.get("sim", {}))

    spec = ModelSpec(Torus(), beta, Cosine(xi), Cosine(1.0))
    bessel = solve_bessel_selfconsistency(xi, beta)
    f_inf = bessel.density(DEFAULT_GRID_TORUS)
    cell = solve_cell_problem(f_inf)
    target_var = 2.0 * cell.D / beta
    sigma = float(np.sqrt(target_var))

    steps = int(round(base["t_final"] / base["dt"]))
    stride = base.get("record_stride") or _auto_stride(steps)
    config = SimConfig(dt=base["dt"], t_final=base["t_final"],
                       n_particles=base["n_particles"],
                       n_realizations=base["n_realizations"],
                       seed=seed, record_stride=stride)
    config_lin = SimConfig(dt=base["dt"], t_final=base["t_final"],
                           n_particles=1, n_realizations=base["n_realizations"],
                           seed=seed, record_stride=stride)

    res_x = run_ensemble(spec, config, mode="particle_system",
                         init=PointMass(0.0), threads=threads)
    res_y = run_ensemble(spec, config_lin, mode="linearized", f_inf=f_inf,
                         init=PointMass(0.0), threads=threads)
    t_end = float(res_x.times[-1])
    x_end = res_x.tagged[:, -1]
    y_end = res_y.tagged[:, -1]
    report_x = clt_diagnostic(x_end, t_end, cell.D, beta)
    report_y = clt_diagnostic(y_end, t_end, cell.D, beta)

    gap = abs(report_x.sample_var - report_y.sample_var)
    combined_se = float(np.hypot(_variance_se(x_end / np.sqrt(t_end)),
                                 _variance_se(y_end / np.sqrt(t_end))))

    files = []
    edges = np.linspace(-4.0 * sigma, 4.0 * sigma, 25)
    for name, ends in (("histogram.csv", x_end), ("histogram_linearized.csv", y_end)):
        counts, _ = np.histogram(ends / np.sqrt(t_end), bins=edges)
        path = out / name
        io.write_histogram_csv(path, edges, counts, sigma)
        files.append(path)
    path = out / "f_inf.csv"
    io.write_density_csv(path, f_inf)
    files.append(path)

    # one full ensemble movie, reusing realization 0's noise streams
    config_one = SimConfig(dt=base["dt"], t_final=base["t_final"],
                           n_particles=base["n_particles"], n_realizations=1,
                           seed=seed, record_stride=stride)
    res_one = run_ensemble(spec, config_one, mode="particle_system",
                           init=PointMass(0.0), store_snapshots=True)
    path = out / "frames.bin"
    io.write_frames(path, res_one.times, res_one.snapshots[0], config_one.dt)
    files.append(path)

    summary = {
        "A": float(bessel.amplitude),
        "D": float(cell.D),
        "target_variance": target_var,
        "t_final": t_end,
        "interacting": {
            "variance": report_x.sample_var,
            "ks_scaled": report_x.ks_scaled,
            "passed": report_x.passed,
        },
        "linearized": {
            "variance": report_y.sample_var,
            "ks_scaled": report_y.ks_scaled,
            "passed": report_y.passed,
        },
        "variance_gap": gap,
        "variance_gap_3se": 3.0 * combined_se,
    }
    path = out / "D_value.json"
    io.write_json(path, summary)
    files.append(path)
    io.write_manifest(out, experiment, seed, extra=None, files=files)
    print(f"{experiment}: var(X)={report_x.sample_var:.4f} var(Y)={report_y.sample_var:.4f} "
          f"target={target_var:.4f} ks={report_x.ks_scaled:.3f}/{report_y.ks_scaled:.3f}")
    return summary


def _gaussian_bump(nodes: np.ndarray, center: float, variance: float) -> np.ndarray:
    return np.exp(-0.5 * (nodes - center) ** 2 / variance)


def _pair_artifacts(out: Path, series) -> list:
    files = []
    path = out / "divergences.csv"
    io.write_divergence_csv(path, series.times, series.h_fg, series.i_fg,
                            series.h_finf, series.l1, series.l2)
    files.append(path)
    for name, grid in (("f_final.csv", series.final_f), ("g_final.csv", series.final_g)):
        path = out / name
        io.write_density_csv(path, grid)
        files.append(path)
    return files


def _run_entropy_line(experiment: str, doc: dict, out: Path, seed: int,
                      paper_scale: bool, threads: int) -> dict:
    sim = doc.get("sim", {})
    spec = ModelSpec(Line(6.0), 1.0, Quadratic(1.0), Quadratic(0.5))
    n = 512
    nodes = line_nodes(6.0, n)
    f0 = DensityGrid(spec.domain, _gaussian_bump(nodes, 0.6, 0.30), normalize=True)
    g0 = DensityGrid(spec.domain, _gaussian_bump(nodes, 0.4, 0.35), normalize=True)
    f_inf = solve_kirkwood_monroe(spec, n=n).density

    dt = 0.9 * max_stable_dt(spec, f_inf)
    t_final = sim.get("t_final", 4.0)
    record_every = sim.get("record_every", 200)
    series = evolve_pair_and_track(spec, f0, g0, f_inf, t_final, dt,
                                   record_every=record_every, keep_snapshots=True)

    alpha, gamma = uniform_convexity(spec)
    moment = estimate_moment_bound(spec, series.snapshots_f, f_inf)
    prefactor = estimate_l1_prefactor(series.times, series.l1, alpha)
    params = BoundParams(
        alpha=alpha,
        gamma=gamma,
        lambda0=0.7,  # largest initial LSI constant: Gaussian variance 0.35
        moment_bound=moment,
        decay_prefactor=prefactor,
        entropy0=float(series.h_fg[0]),
    )
    curve = rho_lambda_curve(params, spec.beta, series.times)
    margins = curve.values - series.h_fg

    files = _pair_artifacts(out, series)
    path = out / "f_inf.csv"
    io.write_density_csv(path, f_inf)
    files.append(path)
    path = out / "rho_lambda.csv"
    io.write_bound_csv(path, curve.times, curve.values, curve.regime_tag)
    files.append(path)

    summary = {
        "dominated": bool(np.all(margins >= 0.0)),
        "min_margin": float(margins.min()),
        "entropy0": float(series.h_fg[0]),
        "moment_bound": moment,
        "decay_prefactor": prefactor,
        "lambda_whole": lsi_constant_whole(params, spec.beta),
        "regime": curve.regime_tag,
        "clipped_steps": series.clipped,
    }
    io.write_manifest(out, experiment, seed, extra=summary, files=files)
    print(f"{experiment}: dominated={summary['dominated']} "
          f"min_margin={summary['min_margin']:.3e} regime={curve.regime_tag}")
    return summary


def _run_entropy_torus(experiment: str, doc: dict, out: Path, seed: int,
                       paper_scale: bool, threads: int) -> dict:
    sim = doc.get("sim", {})
    spec = ModelSpec(Torus(), 0.25, Cosine(0.1), Cosine(0.2))
    n = 256
    nodes = torus_nodes(n)
    f0 = DensityGrid(spec.domain, 1.0 + 0.30 * np.cos(2.0 * np.pi * (nodes - 0.1)), normalize=True)
    g0 = DensityGrid(spec.domain, 1.0 + 0.25 * np.cos(2.0 * np.pi * nodes + 0.4), normalize=True)
    f_inf = solve_kirkwood_monroe(spec, n=n).density

    dt = 0.9 * max_stable_dt(spec, f_inf)
    t_final = sim.get("t_final", 0.12)
    record_every = sim.get("record_every", 500)
    series = evolve_pair_and_track(spec, f0, g0, f_inf, t_final, dt,
                                   record_every=record_every)

    params = BoundParams(
        alpha=1.0,  # unused on the torus; kappa and the initial distances matter
        kappa=series.kappa,
        l2_init=float(series.l2[0]),
        h_init=float(series.h_finf[0]),
    )
    constants = torus_constants(spec, params)
    h0 = float(series.h_fg[0])

    files = _pair_artifacts(out, series)
    path = out / "f_inf.csv"
    io.write_density_csv(path, f_inf)
    files.append(path)

    summary = {
        "Gamma": constants["Gamma"],
        "zeta": constants["zeta"],
        "eta": constants["eta"],
        "entropy0": h0,
        "clipped_steps": series.clipped,
    }
    for i in (1, 2):
        key = f"sigma_xi_{i}"
        if constants[f"a{i}"] <= 0:
            summary[key] = {"applicable": False}
            continue
        curve = sigma_xi_curve(constants, spec.beta, h0, i, series.times)
        margins = curve.values - series.h_fg
        path = out / f"{key}.csv"
        io.write_bound_csv(path, curve.times, curve.values, curve.regime_tag)
        files.append(path)
        summary[key] = {
            "applicable": True,
            "dominated": bool(np.all(margins >= 0.0)),
            "min_margin": float(margins.min()),
            "regime": curve.regime_tag,
        }

    rate_floor = min(constants["zeta"], constants["eta"] / 2.0)
    fitted = fitted_decay_rate(series.times, series.l1)
    summary["l1_rate_fitted"] = fitted
    summary["l1_rate_floor"] = rate_floor
    summary["l1_rate_ok"] = bool(fitted >= rate_floor)

    io.write_manifest(out, experiment, seed, extra=summary, files=files)
    print(f"{experiment}: sigma1={summary['sigma_xi_1']} l1_rate={fitted:.1f} "
          f"floor={rate_floor:.2f}")
    return summary


def _bound_params(spec: ModelSpec, bounds: dict) -> BoundParams:
    alpha, gamma = None, None
    if isinstance(spec.domain, Line):
        try:
            alpha, gamma = uniform_convexity(spec)
        except MeanFieldError:
            pass
    return BoundParams(
        alpha=bounds.get("alpha", alpha if alpha is not None else 1.0),
        gamma=bounds.get("gamma", gamma if gamma is not None else 0.0),
        lambda0=bounds.get("lambda0", 1.0),
        kappa=bounds.get("kappa", 2.0),
        moment_bound=bounds.get("moment_bound", 0.0),
        decay_prefactor=bounds.get("decay_prefactor", 0.0),
        entropy0=bounds.get("entropy0", 0.0),
        l2_init=bounds.get("l2_init", 0.0),
        h_init=bounds.get("h_init", 0.0),
    )


def _run_bounds_report(experiment: str, doc: dict, out: Path, seed: int,
                       paper_scale: bool, threads: int) -> dict:
    model = doc.get("model")
    if not model:
        raise ConfigError("model: bounds_report needs a model block")
    spec = _spec_from_model(model, "model")
    bounds = model.get("bounds", {})
    params = _bound_params(spec, bounds)
    grid = np.linspace(0.0, 10.0, 101)

    report: dict = {"beta": spec.beta}
    files = []

    if isinstance(spec.domain, Line):
        report["domain"] = "line"
        try:
            alpha, gamma = uniform_convexity(spec)
        except MeanFieldError as err:
            report["rho_lambda"] = {"applicable": False, "reason": str(err)}
            report["coupling"] = {"applicable": False, "reason": str(err)}
        else:
            lam = lsi_constant_whole(params, spec.beta)
            curve = rho_lambda_curve(params, spec.beta, grid)
            report["rho_lambda"] = {
                "applicable": True,
                "alpha": alpha,
                "gamma": gamma,
                "lambda0": params.lambda0,
                "Lambda": lam,
                "regime": curve.regime_tag,
                "value_at_0": float(curve.values[0]),
            }
            e0 = bounds.get("e0", 0.0)
            report["coupling"] = {
                "applicable": True,
                "constant": float(coupling_envelope(params, spec.beta, e0, 0.0)),
                "rate": 0.5 * alpha,
            }
            path = out / "rho_lambda.csv"
            io.write_bound_csv(path, curve.times, curve.values, curve.regime_tag)
            files.append(path)
    else:
        report["domain"] = "torus"
        constants = torus_constants(spec, params)
        report["constants"] = constants
        h0 = params.entropy0
        for i in (1, 2):
            key = f"sigma_xi_{i}"
            if constants[f"a{i}"] <= 0:
                report[key] = {"applicable": False,
                               "reason": f"decay rate a{i} is not positive"}
                continue
            curve = sigma_xi_curve(constants, spec.beta, h0, i, grid)
            report[key] = {"applicable": True, "regime": curve.regime_tag,
                           "value_at_0": float(curve.values[0])}
            path = out / f"{key}.csv"
            io.write_bound_csv(path, curve.times, curve.values, curve.regime_tag)
            files.append(path)

    path = out / "bounds_report.json"
    io.write_json(path, report)
    files.append(path)
    io.write_manifest(out, experiment, seed, extra=None, files=files)
    print(f"{experiment}: wrote bounds_report.json ({report['domain']} model)")
    return report


_RUNNERS = {
    "mle_ou": _run_mle,
    "mle_bistable": _run_mle,
    "mle_interaction": _run_mle,
    "clt_torus": _run_clt,
    "entropy_decay_line": _run_entropy_line,
    "entropy_decay_torus": _run_entropy_torus,
    "bounds_report": _run_bounds_report,
}


# ---------------------------------------------------------------------------
# entry point

def _load_config(path: str) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as err:
        raise ConfigError(f"{path}: {err.strerror or err}")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError(f"{path}:{err.lineno}:{err.colno}: {err.msg}")
    return validate_config(doc, source=path)


def _error_chain(err: BaseException) -> str:
    parts = []
    seen = set()
    while err is not None and id(err) not in seen:
        seen.add(id(err))
        parts.append(f"{type(err).__name__}: {err}")
        err = err.__cause__ or (None if err.__suppress_context__ else err.__context__)
    return "\n  caused by ".join(parts)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="meanfield",
        description="Interacting-particle and linearized-diffusion experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run one experiment from a JSON config")
    run.add_argument("config", help="path to the experiment config (JSON)")
    run.add_argument("--paper-scale", action="store_true",
                     help="use full-size ensemble and horizon settings")
    run.add_argument("--seed", type=int, default=None, help="override the config seed")
    run.add_argument("--out", default=None, help="override the output directory")
    run.add_argument("--threads", type=int, default=1,
                     help="worker threads for ensemble stages")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        doc = _load_config(args.config)
        seed = doc["seed"] if args.seed is None else args.seed
        if not 0 <= seed < 2**64:
            raise ConfigError(f"--seed: must be in [0, 2**64), got {seed}")
        if args.threads < 1:
            raise ConfigError(f"--threads: must be >= 1, got {args.threads}")
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2

    experiment = doc["experiment"]
    out = Path(args.out or doc.get("output_dir") or f"{experiment}_out")
    try:
        out.mkdir(parents=True, exist_ok=True)
        _RUNNERS[experiment](experiment, doc, out, int(seed),
                             args.paper_scale, args.threads)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except MeanFieldError as err:
        print(f"runtime error: {_error_chain(err)}", file=sys.stderr)
        return 1
    print(f"artifacts in {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
