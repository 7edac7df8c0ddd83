import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from slicfan.mollify import (convolve_line, convolve_radial_odd, convolve_radial_odd_deriv, make_mollifier,
                             panel_convolution)


def test_unknown_kernel():
    with pytest.raises(ValueError):
        make_mollifier("gauss")


def test_kernel_flags(bump, bump0):
    assert bump.phi0_positive and not bump0.phi0_positive
    assert float(bump0.phi(np.array(0.0))) == 0.0
    # normalisation constant of exp(-1/(1-x^2)) on [-1, 1]
    assert bump.c == pytest.approx(1.0 / 0.4439938161680794, rel=1e-12)


def test_mass_cdf_and_moment(kernel):
    assert quad(lambda z: float(kernel.phi(z)), -1, 1, epsabs=1e-14)[0] == pytest.approx(1.0, abs=1e-12)
    for x in (-0.7, -0.1, 0.0, 0.35, 0.9):
        ref = quad(lambda z: float(kernel.phi(z)), -1, x, epsabs=1e-14)[0]
        mref = quad(lambda z: z * float(kernel.phi(z)), -1, x, epsabs=1e-14)[0]
        assert float(kernel.cdf(np.array(x))) == pytest.approx(ref, abs=1e-12)
        assert float(kernel.moment(np.array(x))) == pytest.approx(mref, abs=1e-12)
    assert float(kernel.cdf(np.array(2.0))) == 1.0 and float(kernel.cdf(np.array(-2.0))) == 0.0
    assert float(kernel.Phi(np.array(0.0))) == pytest.approx(0.0, abs=1e-15)


@given(x=st.floats(-1.2, 1.2))
def test_kernel_is_even_and_supported(x):
    phi = make_mollifier("bump")
    assert float(phi.phi(np.array(x))) == float(phi.phi(np.array(-x)))
    if abs(x) >= 1:
        assert float(phi.phi(np.array(x))) == 0.0
    h = 1e-6
    fd = (float(phi.phi(np.array(x + h))) - float(phi.phi(np.array(x - h)))) / (2 * h)
    assert float(phi.dphi(np.array(x))) == pytest.approx(fd, abs=1e-6)


@given(n=st.floats(2.0, 500.0), x=st.floats(-3.0, 3.0), a=st.floats(-2, 2), b=st.floats(-2, 2))
def test_affine_functions_are_fixed(n, x, a, b):
    phi = make_mollifier("bump")
    val = panel_convolution(phi, n, np.array([x]), lambda s: a * s + b)
    assert val[0] == pytest.approx(a * x + b, abs=1e-10 * (1 + abs(a) + abs(b)))


def test_convolve_line_matches_panel_rule(bump):
    y = lambda s, t: np.abs(s) * t
    for x in (0.0, 0.02, 0.1):
        adaptive = convolve_line(y, 16.0, x, 2.0, bump, kinks=(0.0,))
        fast = panel_convolution(bump, 16.0, np.array([x]), lambda s: np.abs(s) * 2.0, specials=(0.0,))[0]
        assert adaptive == pytest.approx(fast, abs=1e-10)


def test_radial_odd_extension(bump):
    # w(s) = 1 + s: odd extension jumps by 2 at 0
    w = lambda s, t: 1.0 + s
    n = 10.0
    assert convolve_radial_odd(w, n, 0.0, 1.0, bump) == 0.0
    assert convolve_radial_odd(w, n, 0.5, 1.0, bump) == pytest.approx(1.5, abs=1e-10)
    R = 0.03
    ref = 2 * float(bump.Phi(np.array(n * R))) + R
    assert convolve_radial_odd(w, n, R, 1.0, bump) == pytest.approx(ref, abs=1e-10)
    dref = 2 * float(bump.phi_n(np.array(R), n)) + 1.0
    d = convolve_radial_odd_deriv(w, n, R, 1.0, bump, w_R=lambda s, t: 1.0)
    assert d == pytest.approx(dref, abs=1e-9)
    assert convolve_radial_odd_deriv(w, n, R, 1.0, bump) == pytest.approx(dref, abs=1e-6)
