import numpy as np
import pytest

from meanfield import (
    DensityGrid,
    DomainError,
    Line,
    Torus,
    distance_report,
    kde_density,
    lp_distance,
    relative_entropy,
    relative_fisher,
    wasserstein2_1d,
    wasserstein2_empirical,
)
from meanfield.grids import line_nodes, torus_nodes

HALF = 10.0
N = 4096


def gaussian(mean, var, n=N, halfwidth=HALF):
    x = line_nodes(halfwidth, n)
    vals = np.exp(-0.5 * (x - mean) ** 2 / var) / np.sqrt(2 * np.pi * var)
    return DensityGrid(Line(halfwidth), vals, normalize=True)


def gaussian_kl(m1, s1, m2, s2):
    # KL(N(m1,s1^2) | N(m2,s2^2))
    return np.log(s2 / s1) + (s1**2 + (m1 - m2) ** 2) / (2 * s2**2) - 0.5


def gaussian_fisher(m1, s1, m2, s2):
    # I(N1|N2) = E_1[(d/dx log(f1/f2))^2], with a = 1/s1^2, b = 1/s2^2:
    # grad log(f1/f2) = -(a - b) x + a m1 - b m2 (x centered appropriately)
    a, b = 1.0 / s1**2, 1.0 / s2**2
    return (b - a) ** 2 * s1**2 + b**2 * (m1 - m2) ** 2


def gaussian_w2(m1, s1, m2, s2):
    return np.sqrt((m1 - m2) ** 2 + (s1 - s2) ** 2)


def test_relative_entropy_gaussian_closed_form():
    cases = [(0.0, 1.0, 0.5, 1.2), (0.3, 0.7, 0.0, 0.9), (-0.4, 1.1, 0.4, 0.8)]
    for m1, s1, m2, s2 in cases:
        f = gaussian(m1, s1**2)
        g = gaussian(m2, s2**2)
        assert relative_entropy(f, g) == pytest.approx(gaussian_kl(m1, s1, m2, s2), abs=1e-6)


def test_relative_entropy_properties():
    f = gaussian(0.0, 1.0)
    assert relative_entropy(f, f) == 0.0
    g = gaussian(1.0, 0.5)
    assert relative_entropy(f, g) > 0
    # asymmetry
    assert relative_entropy(f, g) != pytest.approx(relative_entropy(g, f), rel=1e-3)


def test_relative_entropy_infinite_when_support_escapes():
    vals = np.ones(64)
    f = DensityGrid(Torus(), vals)
    gvals = np.ones(64)
    gvals[10] = 0.0
    g = DensityGrid(Torus(), gvals, normalize=True)
    assert relative_entropy(f, g) == float("inf")
    # the other direction is finite
    assert np.isfinite(relative_entropy(g, f))


def test_relative_fisher_gaussian_closed_form():
    cases = [(0.0, 1.0, 0.5, 1.2), (0.2, 0.8, -0.1, 1.0)]
    for m1, s1, m2, s2 in cases:
        f = gaussian(m1, s1**2)
        g = gaussian(m2, s2**2)
        assert relative_fisher(f, g) == pytest.approx(gaussian_fisher(m1, s1, m2, s2), rel=1e-3)


def test_relative_fisher_zero_at_equality():
    f = gaussian(0.3, 0.8)
    assert relative_fisher(f, f) == pytest.approx(0.0, abs=1e-12)


def test_lp_distances():
    x = torus_nodes(512)
    f = DensityGrid(Torus(), np.ones(512))
    g = DensityGrid(Torus(), 1.0 + 0.5 * np.cos(2 * np.pi * x), normalize=True)
    # |f - g| = 0.5 |cos|: L1 = 0.5 * 2/pi (O(h^2) quadrature at the kinks),
    # L2 = 0.5 / sqrt(2) (smooth integrand, spectrally exact)
    assert lp_distance(f, g, 1) == pytest.approx(1.0 / np.pi, rel=1e-4)
    assert lp_distance(f, g, 2) == pytest.approx(0.5 / np.sqrt(2), rel=1e-9)
    with pytest.raises(DomainError):
        lp_distance(f, g, 3)
    with pytest.raises(DomainError):
        lp_distance(f, DensityGrid(Torus(), np.ones(256)), 1)


def test_wasserstein2_line_gaussian():
    cases = [(0.0, 1.0, 1.0, 1.0), (0.0, 0.6, 0.3, 1.1), (-0.5, 0.9, 0.5, 0.9)]
    for m1, s1, m2, s2 in cases:
        f = gaussian(m1, s1**2)
        g = gaussian(m2, s2**2)
        assert wasserstein2_1d(f, g) == pytest.approx(gaussian_w2(m1, s1, m2, s2), abs=2e-3)


def test_wasserstein2_torus_narrow_bump_shift():
    # a narrow bump leaves no mass to reroute the short way, so shifting it
    # by delta costs exactly delta; broad densities can do strictly better
    n = 1024
    x = torus_nodes(n)
    d = Torus().wrap_centered(x - 0.5)
    narrow = np.exp(-0.5 * (d / 0.02) ** 2)
    f = DensityGrid(Torus(), narrow, normalize=True)
    g = DensityGrid(Torus(), np.roll(narrow, n // 8), normalize=True)  # shift by 1/8
    assert wasserstein2_1d(f, g) == pytest.approx(0.125, abs=3e-3)
    h = DensityGrid(Torus(), np.roll(narrow, n // 2), normalize=True)  # antipodal
    # optimal circular plan pairs 0.5+u with -u (cost 0.5 - 2|u| per unit):
    # W2^2 = 0.25 - 2 E|u| + 4 E u^2 with u ~ N(0, sigma^2), sigma = 0.02
    sigma = 0.02
    mirror = np.sqrt(0.25 - 2 * sigma * np.sqrt(2 / np.pi) + 4 * sigma**2)
    assert wasserstein2_1d(f, h) == pytest.approx(mirror, abs=2e-3)
    broad = DensityGrid(Torus(), np.exp(np.cos(2 * np.pi * x)), normalize=True)
    broad_shift = DensityGrid(Torus(), np.roll(broad.values, n // 8), normalize=True)
    assert wasserstein2_1d(broad, broad_shift) < 0.125
    # symmetry
    assert wasserstein2_1d(g, f) == pytest.approx(wasserstein2_1d(f, g), rel=1e-10)


def test_wasserstein2_empirical():
    xs = np.array([0.0, 1.0, 2.0])
    ys = np.array([2.5, 0.5, 1.5])
    # sorted pairing: (0,0.5),(1,1.5),(2,2.5)
    assert wasserstein2_empirical(xs, ys) == pytest.approx(0.5)
    with pytest.raises(DomainError):
        wasserstein2_empirical(xs, ys[:2])
    with pytest.raises(DomainError):
        wasserstein2_empirical([], [])


def test_distance_report_consistency():
    f = gaussian(0.0, 1.0)
    g = gaussian(0.4, 0.8)
    rep = distance_report(f, g)
    assert rep.tv == pytest.approx(0.5 * rep.l1, abs=1e-15)
    assert rep.l1 == pytest.approx(lp_distance(f, g, 1))
    assert rep.kl == pytest.approx(relative_entropy(f, g))
    assert rep.w2 is not None
    rep2 = distance_report(f, g, with_w2=False)
    assert rep2.w2 is None


def test_ckp_inequality_random_pairs(rng):
    # l1^2 <= 8 H on 100 random smooth density pairs
    n = 256
    x = torus_nodes(n)
    for _ in range(100):
        c = rng.uniform(-0.4, 0.4, size=4)
        f = DensityGrid(
            Torus(),
            1.0 + c[0] * np.cos(2 * np.pi * x) + c[1] * np.sin(4 * np.pi * x),
            normalize=True,
        )
        g = DensityGrid(
            Torus(),
            1.0 + c[2] * np.cos(2 * np.pi * x + 0.3) + c[3] * np.sin(2 * np.pi * x),
            normalize=True,
        )
        l1 = lp_distance(f, g, 1)
        h = relative_entropy(f, g)
        assert l1**2 <= 8.0 * h + 1e-9


def test_kde_recovers_gaussian(rng):
    samples = rng.normal(0.0, 1.0, size=20000)
    est = kde_density(samples, Line(6.0), n=512)
    x = est.x
    truth = np.exp(-0.5 * x**2) / np.sqrt(2 * np.pi)
    assert np.max(np.abs(est.values - truth)) < 0.02
    assert est.integrate(est.values) == pytest.approx(1.0)


def test_kde_torus_wraps(rng):
    # von Mises-like cluster at the seam: the wrapped kernel must not split it
    samples = Torus().wrap(rng.normal(0.0, 0.05, size=5000))
    est = kde_density(samples, Torus(), n=256)
    # density at the seam node 0 is the peak, and mass well away is tiny
    assert est.values[0] == pytest.approx(est.values.max(), rel=0.05)
    assert est.values[128] < 0.01 * est.values[0]


def test_kde_guards():
    with pytest.raises(DomainError):
        kde_density(np.ones(5), Torus())
    with pytest.raises(DomainError):
        kde_density(np.linspace(0, 1, 50), Torus(), bandwidth=-0.1)
    with pytest.warns(UserWarning, match="degenerate"):
        kde_density(np.zeros(50), Line(2.0))


def test_kde_fixed_bandwidth(rng):
    samples = rng.normal(0.0, 0.5, size=2000)
    wide = kde_density(samples, Line(4.0), n=256, bandwidth=0.5)
    narrow = kde_density(samples, Line(4.0), n=256, bandwidth=0.05)
    # more smoothing flattens the peak
    assert wide.values.max() < narrow.values.max()
