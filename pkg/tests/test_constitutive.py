import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from slicfan.constitutive import (check_hypotheses_1d, estimate_L, make_stored_energy, make_stress_law, radial_stress,
                                  sign_ledger)


@pytest.mark.parametrize("label, L", [("saturating", 0.0), ("nonsaturating", 1.0)])
def test_stress_laws_and_hypotheses(label, L):
    law = make_stress_law(label)
    assert float(law.tau(1.0)) == 0.0 and float(law.W(1.0)) == 0.0
    rep = check_hypotheses_1d(law, np.geomspace(0.05, 50.0, 200))
    assert rep.failures() == []
    assert rep.a1 and rep.a2
    assert rep.L_estimate == pytest.approx(L, abs=1e-6)
    assert rep.a3 is (L == 0.0)


def test_estimate_L_saturating_tail():
    est, err = estimate_L(make_stress_law("saturating"))
    assert abs(est) < 1e-9 and err < 1e-9


def test_unknown_law_and_params_rejected():
    with pytest.raises(ValueError):
        make_stress_law("linear")
    with pytest.raises(ValueError):
        make_stress_law("saturating", {"k": 1})
    with pytest.raises(ValueError):
        check_hypotheses_1d(make_stress_law("saturating"), [-1.0, 1.0])


@given(u=st.floats(0.05, 40.0))
def test_W_derivative_is_tau(u):
    for label in ("saturating", "nonsaturating"):
        law = make_stress_law(label)
        h = 1e-6 * u
        fd = (float(law.W(u + h)) - float(law.W(u - h))) / (2 * h)
        assert fd == pytest.approx(float(law.tau(u)), abs=1e-7)


@pytest.mark.parametrize("label", ["reciprocal", "superlinear", "power"])
def test_stored_energy_derivatives(label):
    E = make_stored_energy(label)
    v = np.geomspace(0.05, 200.0, 40)
    for f, df in ((E.h, E.h_prime), (E.h_prime, E.h_second), (E.h_second, E.h_third)):
        eps = 1e-6 * v
        assert np.allclose((f(v + eps) - f(v - eps)) / (2 * eps), df(v), rtol=1e-6, atol=1e-8)
    assert abs(float(E.h_prime(E.H))) < 1e-12
    led = sign_ledger(E)
    assert led["h2_positive"] and led["h3_negative"] and led["hp_sign_about_H"]


def test_energy_classification():
    rec, sup, pw = (make_stored_energy(k) for k in ("reciprocal", "superlinear", "power"))
    assert rec.L == 1.0 and rec.sublinear_flag
    # h' grows like log: the stress test still sees a sublinear h'(v^d)/v, but h(v)/v is unbounded
    assert math.isinf(sup.L) and sup.sublinear_flag
    assert math.isinf(pw.L) and not pw.sublinear_flag
    assert sup.H == pytest.approx(0.9351730143973137, rel=1e-12)
    assert sign_ledger(rec)["hp_to_L_from_below"]


def test_stored_energy_rejections():
    with pytest.raises(ValueError):
        make_stored_energy("neo-hookean")
    with pytest.raises(ValueError):
        make_stored_energy("reciprocal", d=2)


@given(lam=st.floats(0.3, 5.0))
def test_homogeneous_stress_is_isotropic(lam):
    E = make_stored_energy("reciprocal")
    s = radial_stress(E, lam, lam)
    assert float(s.Phi1) == pytest.approx(float(s.Phi2), rel=1e-14)
    assert float(s.Phi1) == pytest.approx(lam + lam**2 * (1 - lam**-6), rel=1e-12)


def test_stress_is_gradient_of_W():
    E = make_stored_energy("power")
    l1, l2, h = 1.7, 0.9, 1e-6
    s = radial_stress(E, l1, l2)
    dW1 = (E.W_iso(l1 + h, l2) - E.W_iso(l1 - h, l2)) / (2 * h)
    assert float(s.Phi1) == pytest.approx(float(dW1), rel=1e-8)
    # W depends on lam2 through (d-1) equal stretches
    dW2 = (E.W_iso(l1, l2 + h) - E.W_iso(l1, l2 - h)) / (2 * h) / (E.d - 1)
    assert float(s.Phi2) == pytest.approx(float(dW2), rel=1e-8)
    T = s.tensor([0.0, 0.0, 2.0])
    assert T[2, 2] == pytest.approx(float(s.Phi1)) and T[0, 0] == pytest.approx(float(s.Phi2))
    with pytest.raises(ValueError):
        radial_stress(E, -1.0, 1.0)
