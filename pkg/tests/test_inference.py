import numpy as np
import pytest

from meanfield import (
    Bistable,
    ConfigError,
    EstimatePair,
    EstimateTrace,
    LikelihoodConfig,
    PointMass,
    Quadratic,
    SimConfig,
    TrajectoryRecord,
    argmax_loglik,
    build_family_spec,
    closed_form_estimators,
    estimate_over_horizons,
    loglik,
    loglik_linearized,
    loglik_nonlinear,
    run_ensemble,
)
from meanfield.errors import DomainError, EstimationError
from meanfield.inference import (
    EquilibriumCache,
    family_potentials,
    identifiability_profile,
    linearized_drift_coefficients,
)

# three instants, two increments: small enough to check by hand
MICRO_TIMES = np.array([0.0, 0.5, 1.0])
MICRO_STATES = np.array([1.0, 0.2, 0.5])
# left-point pieces: x = [1.0, 0.2], dx = [-0.8, 0.3], dt = [0.5, 0.5]
I_XDX = 1.0 * (-0.8) + 0.2 * 0.3          # -0.74
I_XX = (1.0 + 0.04) * 0.5                  # 0.52


def micro_record():
    return TrajectoryRecord(MICRO_TIMES.copy(), MICRO_STATES.copy())


def micro_config(tag, **kw):
    return LikelihoodConfig(tag=tag, observation=micro_record(), **kw)


def test_family_potentials_table():
    v, w = family_potentials("ou_theta_in_V", 2.0)
    assert isinstance(v, Quadratic) and v.a == 2.0
    assert isinstance(w, Quadratic) and w.a == 1.0
    v, w = family_potentials("ou_theta_in_W", 0.7)
    assert v.a == 1.0 and w.a == 0.7
    v, w = family_potentials("bistable_theta_in_V", 1.3)
    assert isinstance(v, Bistable) and v.a == 1.3
    v, w = family_potentials("bistable_theta_in_W", 0.4)
    assert isinstance(v, Bistable) and v.a == 1.0 and w.a == 0.4
    with pytest.raises(ConfigError):
        family_potentials("ou", 1.0)


def test_linearized_coefficient_table():
    assert linearized_drift_coefficients("ou_theta_in_V", 2.0) == (0.0, 3.0)
    assert linearized_drift_coefficients("ou_theta_in_W", 0.5) == (0.0, 1.5)
    assert linearized_drift_coefficients("bistable_theta_in_V", 1.3) == pytest.approx((1.3, -0.3))
    assert linearized_drift_coefficients("bistable_theta_in_W", 0.4) == pytest.approx((1.0, -0.6))


def test_cache_drift_matches_coefficients():
    # frozen-mean drift from the equilibrium solve must equal the closed-form
    # -c3 x^3 - c1 x for every family (the stationary densities are even)
    x = np.linspace(-1.5, 1.5, 11)
    for tag in ("ou_theta_in_V", "ou_theta_in_W", "bistable_theta_in_V", "bistable_theta_in_W"):
        cache = EquilibriumCache(tag, theta_domain=(0.3, 2.0), n=1024)
        for theta in (0.5, 1.0, 1.5):
            c3, c1 = linearized_drift_coefficients(tag, theta)
            np.testing.assert_allclose(
                cache.drift(theta, x), -c3 * x**3 - c1 * x, atol=5e-4,
                err_msg=f"{tag} @ theta={theta}",
            )


def test_cache_validation():
    with pytest.raises(ConfigError):
        EquilibriumCache("nope")
    with pytest.raises(ConfigError):
        EquilibriumCache("ou_theta_in_V", theta_domain=(1.0, 0.5))
    cache = EquilibriumCache("ou_theta_in_V", theta_domain=(0.3, 2.0), n=512)
    with pytest.raises(DomainError):
        cache.stationary_density(-0.5)


def test_loglik_linearized_matches_quadratic_form():
    # ou_theta_in_V: frozen drift is -(theta+1) x, so the log-likelihood is
    # beta/2 [-(theta+1) I_xdx - (theta+1)^2/2 I_xx] exactly
    cache = EquilibriumCache("ou_theta_in_V", theta_domain=(0.3, 2.0), n=1024)
    config = micro_config("ou_theta_in_V", theta_domain=(0.3, 2.0))
    for theta in (0.5, 1.0, 1.5):
        expect = 0.5 * (-(theta + 1) * I_XDX - 0.5 * (theta + 1) ** 2 * I_XX)
        assert loglik_linearized(config, theta, cache) == pytest.approx(expect, abs=5e-4)
    # dispatch goes through the same path
    assert loglik(config, 1.0, cache) == pytest.approx(loglik_linearized(config, 1.0, cache))


def test_loglik_guards():
    config = micro_config("ou_theta_in_V", theta_domain=(0.3, 2.0))
    with pytest.raises(DomainError):
        loglik_linearized(config, 5.0)  # outside the search domain
    wrong_cache = EquilibriumCache("ou_theta_in_W", theta_domain=(0.3, 2.0), n=512)
    with pytest.raises(ConfigError):
        loglik_linearized(config, 1.0, wrong_cache)
    with pytest.raises(ConfigError):
        loglik_nonlinear(config, 1.0)  # drift_mode is 'linearized'
    nl = micro_config("bistable_theta_in_V", drift_mode="nonlinear_exact_mean", x0_mean=1.0)
    with pytest.raises(ConfigError):
        loglik_nonlinear(nl, 1.0)  # no closed-form mean for bistable families
    nl2 = micro_config("bistable_theta_in_V", drift_mode="nonlinear_empirical_mean")
    with pytest.raises(ConfigError):
        loglik_nonlinear(nl2, 1.0)  # mean_curve missing


def test_likelihood_config_validation():
    with pytest.raises(ConfigError):
        micro_config("unknown_family")
    with pytest.raises(ConfigError):
        micro_config("ou_theta_in_V", drift_mode="euler")
    with pytest.raises(ConfigError):
        micro_config("ou_theta_in_V", beta=-1.0)
    with pytest.raises(ConfigError):
        micro_config("ou_theta_in_V", theta_domain=(0.0, 2.0))
    with pytest.raises(ConfigError):
        micro_config("ou_theta_in_V", mean_curve=np.zeros(5))
    with pytest.raises(ConfigError):
        micro_config("ou_theta_in_V", x0_mean=float("nan"))
    with pytest.raises(ConfigError):
        LikelihoodConfig(tag="ou_theta_in_V", observation=np.zeros(3))


def test_micro_linearized_estimate_all_ou():
    # theta_tilde = (-I_xdx - I_xx) / I_xx = (0.74 - 0.52) / 0.52
    expect = (0.74 - 0.52) / 0.52
    for tag in ("ou_theta_in_V", "ou_theta_in_W"):
        pair = closed_form_estimators(micro_config(tag, x0_mean=1.0))
        assert isinstance(pair, EstimatePair)
        assert pair.theta_linearized == pytest.approx(expect, rel=1e-12)
        assert pair.convention == "ito-left"


def test_micro_ou_w_exact_estimate():
    # g_t = x - e^{-t}: [0, 0.2 - e^{-1/2}]
    g1 = 0.2 - np.exp(-0.5)
    num = -(g1 * 0.3) - (0.2 * g1 * 0.5)
    den = g1 * g1 * 0.5
    pair = closed_form_estimators(micro_config("ou_theta_in_W", x0_mean=1.0))
    assert pair.theta_mle == pytest.approx(num / den, rel=1e-12)
    assert pair.diagnostics["mle_curvature"] < 0


def test_micro_ou_v_exact_estimate_maximizes_likelihood():
    config = micro_config("ou_theta_in_V", x0_mean=1.0)
    pair = closed_form_estimators(config)
    nl = micro_config("ou_theta_in_V", drift_mode="nonlinear_exact_mean", x0_mean=1.0)
    at = loglik_nonlinear(nl, pair.theta_mle)
    for d in (-0.02, 0.02):
        assert at >= loglik_nonlinear(nl, pair.theta_mle + d)


def test_micro_bistable_v_estimates():
    # phi = x^3 - x = [0, -0.192]; den = 0.192^2 * 0.5
    mean_curve = np.array([0.9, 0.3, 0.4])
    pair = closed_form_estimators(micro_config("bistable_theta_in_V", mean_curve=mean_curve))
    den = 0.192**2 * 0.5
    num_hat = -(-0.192 * 0.3) - ((0.2 - 0.3) * -0.192 * 0.5)
    num_tilde = -(-0.192 * 0.3) - (0.2 * -0.192 * 0.5)
    assert pair.theta_mle == pytest.approx(num_hat / den, rel=1e-12)
    assert pair.theta_linearized == pytest.approx(num_tilde / den, rel=1e-12)


def test_micro_bistable_w_estimates():
    mean_curve = np.array([0.9, 0.3, 0.4])
    pair = closed_form_estimators(micro_config("bistable_theta_in_W", mean_curve=mean_curve))
    # dev = x - mean = [0.1, -0.1]
    den_hat = (0.01 + 0.01) * 0.5
    num_hat = -(0.1 * -0.8 + -0.1 * 0.3) - (0.1 * 0.0 * 0.5 + -0.1 * -0.192 * 0.5)
    assert pair.theta_mle == pytest.approx(num_hat / den_hat, rel=1e-12)
    num_tilde = 0.74 - (0.2 * -0.192 * 0.5)
    assert pair.theta_linearized == pytest.approx(num_tilde / I_XX, rel=1e-12)


def test_bistable_estimators_require_mean_curve():
    with pytest.raises(ConfigError):
        closed_form_estimators(micro_config("bistable_theta_in_V"))
    with pytest.raises(ConfigError):
        closed_form_estimators(micro_config("bistable_theta_in_W"))
    with pytest.raises(ConfigError):
        closed_form_estimators(micro_config("ou_theta_in_W"))  # x0_mean missing


def test_estimates_clip_to_domain():
    pair = closed_form_estimators(micro_config("ou_theta_in_W", x0_mean=1.0, theta_domain=(0.5, 20.0)))
    # unclipped linearized value is ~0.423, below the lower edge
    assert pair.theta_linearized == 0.5


def test_degenerate_path_raises():
    # a path pinned at the origin carries no quadratic variation signal
    flat = TrajectoryRecord(MICRO_TIMES.copy(), np.zeros(3))
    with pytest.raises(EstimationError) as err:
        closed_form_estimators(LikelihoodConfig(tag="ou_theta_in_V", observation=flat))
    assert "denominator" in str(err.value)
    # ou_theta_in_W: a path equal to its own exact mean zeroes g_t
    on_mean = TrajectoryRecord(MICRO_TIMES.copy(), np.exp(-MICRO_TIMES))
    with pytest.raises(EstimationError):
        closed_form_estimators(
            LikelihoodConfig(tag="ou_theta_in_W", observation=on_mean, x0_mean=1.0)
        )


def test_too_short_record():
    one = TrajectoryRecord(np.array([0.0]), np.array([1.0]))
    with pytest.raises(EstimationError):
        closed_form_estimators(LikelihoodConfig(tag="ou_theta_in_V", observation=one))
    cfg = LikelihoodConfig(tag="ou_theta_in_V", observation=one)
    cache = EquilibriumCache("ou_theta_in_V", n=512)
    assert loglik_linearized(cfg, 1.0, cache) == 0.0


def simulated_ou_config(tag="ou_theta_in_V", theta0=1.0, seed=3):
    spec = build_family_spec(tag, theta0)
    sim = SimConfig(dt=0.01, t_final=5.0, n_particles=30, n_realizations=1, seed=seed)
    res = run_ensemble(spec, sim, init=PointMass(1.0))
    return LikelihoodConfig(
        tag=tag,
        observation=res.trajectory(0),
        x0_mean=1.0,
        mean_curve=res.mean_curve[0],
    )


def test_horizon_trace_matches_direct_estimates():
    config = simulated_ou_config()
    pair = closed_form_estimators(config)
    for kind, direct in (("mle", pair.theta_mle), ("linearized_mle", pair.theta_linearized)):
        trace = estimate_over_horizons(config, [2.5, 5.0], kind=kind)
        assert isinstance(trace, EstimateTrace)
        assert trace.estimator_kind == kind
        assert trace.estimates[-1] == pytest.approx(direct, rel=1e-9)
    # same for the interaction family
    config_w = simulated_ou_config("ou_theta_in_W")
    pair_w = closed_form_estimators(config_w)
    trace_w = estimate_over_horizons(config_w, [1.0, 2.0, 5.0], kind="mle")
    assert trace_w.estimates[-1] == pytest.approx(pair_w.theta_mle, rel=1e-9)


def test_horizon_trace_matches_direct_bistable():
    spec = build_family_spec("bistable_theta_in_V", 1.0)
    sim = SimConfig(dt=0.01, t_final=4.0, n_particles=30, n_realizations=1, seed=11)
    res = run_ensemble(spec, sim, init=PointMass(1.0))
    config = LikelihoodConfig(
        tag="bistable_theta_in_V",
        observation=res.trajectory(0),
        mean_curve=res.mean_curve[0],
    )
    pair = closed_form_estimators(config)
    trace = estimate_over_horizons(config, [2.0, 4.0], kind="mle")
    assert trace.estimates[-1] == pytest.approx(pair.theta_mle, rel=1e-9)
    trace_lin = estimate_over_horizons(config, [2.0, 4.0], kind="linearized_mle")
    assert trace_lin.estimates[-1] == pytest.approx(pair.theta_linearized, rel=1e-9)


def test_horizon_validation():
    config = simulated_ou_config()
    with pytest.raises(DomainError):
        estimate_over_horizons(config, [2.0, 1.0])
    with pytest.raises(DomainError):
        estimate_over_horizons(config, [10.0])  # beyond the recorded span
    with pytest.raises(DomainError):
        estimate_over_horizons(config, [1e-9])  # covers no increment
    with pytest.raises(ConfigError):
        estimate_over_horizons(config, [1.0], kind="map")


def test_argmax_matches_closed_form_ou_w():
    config = micro_config(
        "ou_theta_in_W", drift_mode="nonlinear_exact_mean", x0_mean=1.0, theta_domain=(0.01, 20.0)
    )
    pair = closed_form_estimators(micro_config("ou_theta_in_W", x0_mean=1.0))
    found = argmax_loglik(config, tol=1e-6)
    assert found == pytest.approx(pair.theta_mle, abs=1e-4)


def test_identifiability_profile_vanishes_only_at_truth():
    cache = EquilibriumCache("ou_theta_in_V", theta_domain=(0.5, 1.5), n=512)
    config = micro_config("ou_theta_in_V", theta_domain=(0.5, 1.5))
    thetas, gaps = identifiability_profile(config, 1.0, n_scan=11, cache=cache)
    at_truth = np.argmin(np.abs(thetas - 1.0))
    assert thetas[at_truth] == 1.0
    assert gaps[at_truth] == pytest.approx(0.0, abs=1e-14)
    others = np.delete(gaps, at_truth)
    assert np.all(others > 1e-6)
    # gap grows monotonically away from the truth on each side
    assert np.all(np.diff(gaps[: at_truth + 1]) <= 0)
    assert np.all(np.diff(gaps[at_truth:]) >= 0)


def test_estimator_consistency_long_window():
    # a single tagged particle in a moderately large ensemble over T = 60
    # recovers theta0 = 1 to within a few tenths under both estimators
    spec = build_family_spec("ou_theta_in_V", 1.0)
    sim = SimConfig(dt=0.01, t_final=60.0, n_particles=50, n_realizations=1, seed=7)
    res = run_ensemble(spec, sim, init=PointMass(1.0))
    config = LikelihoodConfig(
        tag="ou_theta_in_V",
        observation=res.trajectory(0),
        x0_mean=1.0,
        mean_curve=res.mean_curve[0],
    )
    pair = closed_form_estimators(config)
    assert pair.theta_mle == pytest.approx(1.0, abs=0.45)
    assert pair.theta_linearized == pytest.approx(1.0, abs=0.45)
