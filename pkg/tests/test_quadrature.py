import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from slicfan.quadrature import (QuadratureError, composite_rule, gauss_jacobi_left, gauss_legendre, graded_breaks,
                                map_panels_singular, quad_panels)


def test_gauss_legendre_integrates_polynomials_exactly():
    x, w = gauss_legendre(6)
    for k in range(12):
        assert np.dot(w, x**k) == pytest.approx(1.0 / (k + 1), rel=1e-14)


@given(p=st.floats(-0.9, 2.0), k=st.integers(0, 8))
def test_gauss_jacobi_moments(p, k):
    x, w = gauss_jacobi_left(10, p)
    assert np.dot(w, x**k) == pytest.approx(1.0 / (k + p + 1.0), rel=1e-11)


def test_singular_panel_right_end():
    # int_0^2 (2 - z)^-0.5 dz = 2 sqrt 2
    z, w = map_panels_singular(0.0, 2.0, -0.5, m=8, at="right")
    assert w.sum() == pytest.approx(2.0 * math.sqrt(2.0), rel=1e-13)
    with pytest.raises(ValueError):
        map_panels_singular(0.0, 1.0, 0.5, at="middle")


def test_composite_rule_with_kink():
    X, W = composite_rule([-1.0, 0.0, 1.0], m=10, sub=3)
    assert np.dot(W, np.abs(X)) == pytest.approx(1.0, abs=1e-14)
    assert composite_rule([1.0])[0].size == 0


@given(h0=st.floats(1e-4, 0.5), ratio=st.floats(1.1, 3.0))
def test_graded_breaks_cover_interval(h0, ratio):
    br = graded_breaks(0.0, 1.0, h0, ratio)
    assert br[0] == 0.0 and br[-1] == 1.0
    assert np.all(np.diff(br) > 0)


def test_quad_panels_and_failure():
    assert quad_panels(np.cos, 0.0, math.pi / 2, points=(0.3,)) == pytest.approx(1.0, abs=1e-12)
    assert quad_panels(np.cos, 1.0, 0.0) == 0.0
    with pytest.raises(QuadratureError):
        quad_panels(lambda x: np.sin(1.0 / (x + 1e-3)), 0.0, 1.0, tol=1e-14, limit=5)
