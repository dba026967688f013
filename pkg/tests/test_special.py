import numpy as np
import pytest

from meanfield.special import bernoulli_b, bessel_i0, bessel_i1, bessel_ratio, lambert_w_at_one

# Reference values computed with scipy.special.iv / lambertw and frozen here
# so the suite stays independent of scipy's own Bessel implementation.
I0_REFERENCE = {
    0.1: 1.0025015629340956,
    0.5: 1.0634833707413236,
    0.9157374007334838: 1.2208906967447073,
    1.0: 1.2660658777520084,
    3.0: 4.880792585865025,
    7.5: 268.1613115151893,
    20.0: 43558282.559553534,
    55.0: 4.148789560733178e22,
}
I1_REFERENCE = {
    0.1: 0.0500625260470927,
    0.5: 0.25789430539089636,
    0.9157374007334838: 0.5075699248443366,
    1.0: 0.565159103992485,
    3.0: 3.95337021740261,
    7.5: 249.58436542268805,
    20.0: 42454973.38512777,
    55.0: 4.1108986452992795e22,
}


@pytest.mark.parametrize("x", sorted(I0_REFERENCE))
def test_bessel_i0_reference(x):
    assert bessel_i0(x) == pytest.approx(I0_REFERENCE[x], rel=1e-13)


@pytest.mark.parametrize("x", sorted(I1_REFERENCE))
def test_bessel_i1_reference(x):
    assert bessel_i1(x) == pytest.approx(I1_REFERENCE[x], rel=1e-13)


def test_bessel_at_zero():
    assert bessel_i0(0.0) == 1.0
    assert bessel_i1(0.0) == 0.0


def test_bessel_even_odd_symmetry():
    for x in (0.3, 2.0, 11.0):
        assert bessel_i0(-x) == pytest.approx(bessel_i0(x), rel=1e-15)
        assert bessel_i1(-x) == pytest.approx(-bessel_i1(x), rel=1e-15)


def test_bessel_ratio_matches_quotient():
    for x in (1e-8, 0.2, 1.0, 6.0, 30.0, 80.0):
        assert bessel_ratio(x) == pytest.approx(bessel_i1(x) / bessel_i0(x), rel=1e-12)


def test_bessel_ratio_small_argument_expansion():
    # I1/I0 = x/2 - x^3/16 + O(x^5)
    x = 1e-4
    assert bessel_ratio(x) == pytest.approx(x / 2 - x**3 / 16, abs=1e-18)


def test_bessel_ratio_bounded_by_one():
    for x in (0.5, 5.0, 50.0, 500.0):
        r = bessel_ratio(x)
        assert 0.0 < r < 1.0


def test_lambert_value():
    w = lambert_w_at_one()
    assert w == pytest.approx(0.5671432904097838, abs=1e-14)
    assert abs(w * np.exp(w) - 1.0) < 1e-14


def test_bernoulli_identities():
    # B(z) = z / (e^z - 1); B(0) = 1, B(-z) = B(z) e^z
    assert bernoulli_b(0.0) == 1.0
    for z in (1e-12, 1e-6, 0.1, 2.0, 30.0):
        b = bernoulli_b(z)
        assert b == pytest.approx(z / np.expm1(z), rel=1e-13)
        assert bernoulli_b(-z) == pytest.approx(b * np.exp(z), rel=1e-12)


def test_bernoulli_small_argument_series():
    z = 1e-9
    # 1 - z/2 + z^2/12
    assert bernoulli_b(z) == pytest.approx(1.0 - z / 2 + z**2 / 12, abs=1e-16)


def test_bernoulli_vectorized():
    z = np.array([-2.0, 0.0, 1.5])
    out = bernoulli_b(z)
    assert out.shape == z.shape
    assert out[1] == 1.0
