import numpy as np
import pytest

from meanfield import (
    ConfigError,
    Cosine,
    DensityGrid,
    DomainError,
    Line,
    ModelSpec,
    PairSeries,
    Quadratic,
    Torus,
    Zero,
    evolve,
    evolve_pair_and_track,
    step_fp,
)
from meanfield.fokker_planck import PDEState, fitted_decay_rate, max_stable_dt
from meanfield.grids import line_nodes, torus_nodes


def torus_spec(xi=0.5, beta=1.0):
    return ModelSpec(Torus(), beta, Cosine(xi), Cosine(1.0))


def gaussian_grid(halfwidth, n, mean, var):
    x = line_nodes(halfwidth, n)
    return DensityGrid(Line(halfwidth), np.exp(-0.5 * (x - mean) ** 2 / var), normalize=True)


def test_max_stable_dt_scaling():
    g = DensityGrid(Torus(), np.ones(128))
    spec = torus_spec(beta=2.0)
    # 0.9 h^2 / (2 / beta)
    assert max_stable_dt(spec, g) == pytest.approx(0.9 * g.h**2 / (2 / 2.0))
    with pytest.raises(ConfigError):
        step_fp(spec, PDEState(g), dt=1.0)


def test_step_conserves_mass_and_positivity():
    spec = torus_spec()
    x = torus_nodes(128)
    g = DensityGrid(Torus(), 1.0 + 0.8 * np.cos(2 * np.pi * x), normalize=True)
    state = PDEState(g)
    dt = max_stable_dt(spec, g)
    for _ in range(50):
        state = step_fp(spec, state, dt)
    f = state.density
    assert f.integrate(f.values) == pytest.approx(1.0, abs=1e-12)
    assert f.values.min() >= 0


def test_line_zero_flux_conserves_mass():
    spec = ModelSpec(Line(5.0), 1.0, Quadratic(1.0), Quadratic(0.5))
    f = gaussian_grid(5.0, 256, 0.8, 0.2)
    dt = max_stable_dt(spec, f)
    state = evolve(spec, PDEState(f), t_final=200 * dt, dt=dt)
    assert state.density.integrate(state.density.values) == pytest.approx(1.0, abs=1e-12)


def test_gibbs_state_is_discretely_stationary(f_inf_cosine):
    # the exponential-fitting flux vanishes identically on e^{-beta Phi}
    spec = torus_spec()
    dt = max_stable_dt(spec, f_inf_cosine)
    state = evolve(spec, PDEState(f_inf_cosine), t_final=100 * dt, dt=dt)
    assert np.max(np.abs(state.density.values - f_inf_cosine.values)) < 1e-12


def test_ou_moment_evolution_oracle():
    # V = a x^2 / 2, W = 0: mean m_t = m0 e^{-a t},
    # variance s_t = s0 e^{-2 a t} + (1 - e^{-2 a t}) / (a beta)
    a, beta = 1.0, 1.0
    spec = ModelSpec(Line(8.0), beta, Quadratic(a), Zero())
    m0, s0 = 1.0, 0.09
    f = gaussian_grid(8.0, 512, m0, s0)
    dt = max_stable_dt(spec, f)
    t_final = 0.5
    state = evolve(spec, PDEState(f), t_final=t_final, dt=dt)
    m_exact = m0 * np.exp(-a * t_final)
    s_exact = s0 * np.exp(-2 * a * t_final) + (1 - np.exp(-2 * a * t_final)) / (a * beta)
    assert state.density.mean() == pytest.approx(m_exact, abs=2e-4)
    assert state.density.variance() == pytest.approx(s_exact, rel=2e-3)
    assert state.time == pytest.approx(t_final)


def test_linearized_mode_freezes_interaction():
    # with Phi frozen at V + W * f_inf the linearized equation is an OU flow
    # in the effective quadratic potential (a + c) x^2 / 2 when f_inf has
    # mean zero, so its variance relaxes toward 1 / (beta (a + c))
    a, c, beta = 1.0, 0.5, 1.0
    spec = ModelSpec(Line(8.0), beta, Quadratic(a), Quadratic(c))
    x = line_nodes(8.0, 512)
    s_inf = 1.0 / (beta * (a + c))
    f_inf = DensityGrid(Line(8.0), np.exp(-0.5 * x**2 / s_inf), normalize=True)
    f = gaussian_grid(8.0, 512, 0.7, 0.2)
    dt = max_stable_dt(spec, f)
    t_final = 0.4
    state = evolve(spec, PDEState(f), t_final=t_final, dt=dt, mode="linearized", f_inf=f_inf)
    ac = a + c
    m_exact = 0.7 * np.exp(-ac * t_final)
    s_exact = 0.2 * np.exp(-2 * ac * t_final) + (1 - np.exp(-2 * ac * t_final)) / (beta * ac)
    assert state.density.mean() == pytest.approx(m_exact, abs=5e-4)
    assert state.density.variance() == pytest.approx(s_exact, rel=5e-3)


def test_evolve_mode_validation():
    spec = torus_spec()
    g = DensityGrid(Torus(), np.ones(64))
    with pytest.raises(ConfigError):
        step_fp(spec, PDEState(g), dt=1e-5, mode="spectral")
    with pytest.raises(ConfigError):
        step_fp(spec, PDEState(g), dt=1e-5, mode="linearized")
    with pytest.raises(ConfigError):
        evolve(spec, PDEState(g), t_final=0.01, dt=1e-5, mode="linearized")
    with pytest.raises(ConfigError):
        evolve(spec, PDEState(g), t_final=-1.0, dt=1e-5)


def test_evolve_absolute_horizon():
    spec = torus_spec()
    g = DensityGrid(Torus(), np.ones(64))
    dt = max_stable_dt(spec, g)
    mid = evolve(spec, PDEState(g), t_final=20 * dt, dt=dt)
    out = evolve(spec, mid, t_final=40 * dt, dt=dt)
    assert out.time == pytest.approx(40 * dt)
    # one uninterrupted run to the same horizon agrees
    direct = evolve(spec, PDEState(g), t_final=40 * dt, dt=dt)
    np.testing.assert_allclose(out.density.values, direct.density.values, atol=1e-13)


def test_nonlinear_converges_to_kirkwood_monroe(bessel_half):
    spec = torus_spec()
    x = torus_nodes(128)
    f = DensityGrid(Torus(), 1.0 + 0.5 * np.sin(2 * np.pi * x), normalize=True)
    dt = 0.9 * max_stable_dt(spec, f)
    state = evolve(spec, PDEState(f), t_final=1.0, dt=dt)
    ref = bessel_half.density(128)
    assert np.max(np.abs(state.density.values - ref.values)) < 1e-8


def test_pair_tracking_series_shapes(f_inf_cosine):
    spec = torus_spec()
    x = f_inf_cosine.x
    f0 = DensityGrid(Torus(), 1.0 + 0.3 * np.cos(2 * np.pi * (x - 0.1)), normalize=True)
    g0 = DensityGrid(Torus(), 1.0 + 0.25 * np.cos(2 * np.pi * x + 0.4), normalize=True)
    dt = 0.9 * max_stable_dt(spec, f0)
    series = evolve_pair_and_track(
        spec, f0, g0, f_inf_cosine, t_final=0.01, dt=dt, record_every=25, keep_snapshots=True
    )
    assert isinstance(series, PairSeries)
    n = series.times.size
    for arr in (series.h_fg, series.i_fg, series.h_finf, series.l1, series.l2):
        assert arr.size == n
    assert series.times[0] == 0.0
    assert series.times[-1] == pytest.approx(0.01)
    assert len(series.snapshots_f) == n
    # kappa sandwiches both initial densities
    assert series.kappa >= f0.values.max()
    assert series.kappa >= 1.0 / g0.values.min()
    # entropies are nonnegative and the f-to-equilibrium entropy decays
    assert np.all(series.h_fg >= 0)
    assert series.h_finf[-1] < series.h_finf[0]
    assert series.final_f is not None and series.final_g is not None


def test_pair_tracking_rejects_bad_inputs(f_inf_cosine):
    spec = torus_spec()
    f0 = DensityGrid(Torus(), np.ones(512))
    vals = np.ones(512)
    vals[0] = 0.0
    g_zero = DensityGrid(Torus(), vals, normalize=True)
    with pytest.raises(DomainError):
        evolve_pair_and_track(spec, f0, g_zero, f_inf_cosine, t_final=0.01, dt=1e-6)
    small = DensityGrid(Torus(), np.ones(256))
    with pytest.raises(DomainError):
        evolve_pair_and_track(spec, small, small, f_inf_cosine, t_final=0.01, dt=1e-6)
    with pytest.raises(ConfigError):
        evolve_pair_and_track(spec, f0, f0, f_inf_cosine, t_final=0.01, dt=1e-6, record_every=0)


def test_pair_identical_initials_stay_close(f_inf_cosine):
    # f0 = g0: H(f|g) starts at zero and stays small over a short window
    spec = torus_spec()
    x = f_inf_cosine.x
    f0 = DensityGrid(Torus(), 1.0 + 0.2 * np.cos(2 * np.pi * x), normalize=True)
    dt = 0.9 * max_stable_dt(spec, f0)
    series = evolve_pair_and_track(spec, f0, f0, f_inf_cosine, t_final=0.005, dt=dt, record_every=50)
    assert series.h_fg[0] == pytest.approx(0.0, abs=1e-14)
    # the two dynamics separate only through the O(t) interaction mismatch
    assert series.h_fg[-1] < 5e-3
    assert np.all(np.diff(series.h_fg) > -1e-12)


def test_line_pair_has_no_kappa():
    spec = ModelSpec(Line(6.0), 1.0, Quadratic(1.0), Quadratic(0.5))
    f0 = gaussian_grid(6.0, 256, 0.5, 0.3)
    g0 = gaussian_grid(6.0, 256, 0.3, 0.35)
    x = line_nodes(6.0, 256)
    f_inf = DensityGrid(Line(6.0), np.exp(-0.5 * x**2 / (1 / 1.5)), normalize=True)
    dt = 0.9 * max_stable_dt(spec, f0)
    series = evolve_pair_and_track(spec, f0, g0, f_inf, t_final=0.01, dt=dt, record_every=100)
    assert series.kappa is None


def test_fitted_decay_rate_exact_recovery():
    t = np.linspace(0, 12, 400)
    vals = 0.5 * np.exp(-2.5 * t)
    rate = fitted_decay_rate(t, vals, floor=1e-8, ceiling=1e-2)
    assert rate == pytest.approx(2.5, rel=1e-10)
    with pytest.raises(DomainError):
        fitted_decay_rate(t[:3], vals[:3], floor=1e-8, ceiling=1e-2)
