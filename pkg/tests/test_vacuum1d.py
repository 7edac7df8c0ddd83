import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from slicfan.vacuum1d import (MollifiedFanFields, displacement_profile, energy_at_scale, fan_fields,
                              first_equation_identity, fan_bounds, make_vacuum_fan, vacuum_energy,
                              vacuum_energy_closed, vacuum_residual, write_energy_json, write_fan_csv)
from slicfan.weakform import make_bump_1d


def test_fan_parameters(vac):
    assert (vac.w, vac.xi_F, vac.delta_mass) == (-1.0, 1.0, 4.0)
    assert vac.kappa == pytest.approx(1 / 3) and vac.beta == pytest.approx(2 / 3) and vac.r0 == 2.0
    other = make_vacuum_fan(0.5, 8.0, 1.4)
    assert other.xi_F == pytest.approx(0.5 ** -1.2)
    assert other.delta_mass == pytest.approx(-4 * other.w / 0.4)


@pytest.mark.parametrize("args", [(1.0, 1.0, 2.0), (0.0, 4.0, 2.0), (1.0, 4.0, 1.0)])
def test_fan_rejections(args):
    with pytest.raises(ValueError):
        make_vacuum_fan(*args)


def test_limit_fields_match_outer_states(vac):
    u, v = fan_fields(vac, np.array([1 - 1e-12, 1.5, -1.5]))
    assert u[0] == pytest.approx(1.0) and v[0] == pytest.approx(4.0)
    assert u[1] == 1.0 and v[1] == 4.0 and v[2] == -4.0
    r = displacement_profile(vac, np.array([1e-300, 1.0, 2.0, -2.0]))
    assert r[0] == pytest.approx(2.0) and r[1] == pytest.approx(5.0) and r[2] == pytest.approx(6.0) and r[3] == -r[2]


@given(xi=st.floats(0.05, 0.95))
def test_rarefaction_solves_self_similar_system(xi):
    fan = make_vacuum_fan(1.0, 4.0, 2.0)
    h = 1e-6
    u = lambda x: fan_fields(fan, np.array(x))[0]
    v = lambda x: fan_fields(fan, np.array(x))[1]
    du, dv = (u(xi + h) - u(xi - h)) / (2 * h), (v(xi + h) - v(xi - h)) / (2 * h)
    dp = ((u(xi + h) ** -2 - u(xi - h) ** -2) / 2) / (2 * h)
    assert -xi * du - dv == pytest.approx(0.0, abs=1e-6)
    assert xi * dv - dp == pytest.approx(0.0, abs=1e-6)
    # v = r - xi r'
    r = lambda x: displacement_profile(fan, np.array(x))
    assert v(xi) == pytest.approx(r(xi) - xi * (r(xi + h) - r(xi - h)) / (2 * h), abs=1e-7)


@pytest.mark.parametrize("xi", [0.0, 0.004, 0.02, 0.5, 0.99, 1.0, 1.02])
def test_mollified_u_matches_adaptive_oracle(vac, kernel, xi):
    n, h = 64.0, 1 / 64
    F = MollifiedFanFields(vac, kernel, n)
    f = lambda s: float(kernel.phi_n(np.array(xi - s), n)) * float(fan_fields(vac, np.array(s))[0])
    pts = [p for p in (0.0, -1.0, 1.0) if xi - h < p < xi + h]
    ref = quad(f, xi - h, xi + h, points=pts or None, limit=400, epsabs=1e-13)[0]
    ref += vac.delta_mass * float(kernel.phi_n(np.array(xi), n))
    assert float(F.u(xi)) == pytest.approx(ref, rel=1e-9, abs=1e-9)


def test_mollified_parity_and_coarse_scale(vac, bump):
    F = MollifiedFanFields(vac, bump, 32)
    x = np.array([0.003, 0.2, 0.97])
    assert np.allclose(F.r(-x), -F.r(x)) and np.allclose(F.u(-x), F.u(x)) and np.allclose(F.v(-x), -F.v(x))
    with pytest.raises(ValueError):
        MollifiedFanFields(vac, bump, 2)


def test_first_equation_identity(vac, bump):
    psi = make_bump_1d(0.15, 0.8)
    for n in (8, 128):
        assert abs(first_equation_identity(vac, bump, n, psi)) < 1e-10


def test_residual_rates_with_and_without_the_delta(vac, bump):
    ns = [16, 32, 64, 128]
    through = vacuum_residual(vac, bump, ns, make_bump_1d(0.15, 0.8))
    away = vacuum_residual(vac, bump, ns, make_bump_1d(0.5, 0.3))
    assert through.verdict and away.verdict
    # both decay like n^-2; the test function away from the delta has the smaller constant
    assert through.rate == pytest.approx(2.0, abs=0.05) and away.rate == pytest.approx(2.0, abs=0.05)
    assert all(abs(a) < abs(b) for a, b in zip(away.values, through.values))
    with pytest.raises(ValueError):
        vacuum_residual(vac, bump, ns, make_bump_1d(0.5, 0.6))


def test_energy_closed_form(vac, bump):
    assert vacuum_energy_closed(vac, 1.0) == pytest.approx(13.0, abs=1e-13)
    # beyond the fan the outer state adds u^(1-g)/(g(g-1)) + v^2/2 = 8.5 per unit length on each side
    assert vacuum_energy_closed(vac, 1.5) == pytest.approx(13.0 + 8.5, abs=1e-13)
    # mollification lowers the energy towards the limit from below
    e = [energy_at_scale(vac, bump, n, 1.0) for n in (32, 64)]
    assert e[0] < e[1] < 13.0


def test_energy_extrapolation(vac):
    res = vacuum_energy(vac, 1.0, [32, 64, 128, 256])
    # three correction terms from four levels
    assert res.error < 1e-4 and res.exponents[0] == 1.0
    with pytest.raises(ValueError):
        vacuum_energy(vac, 1.5, [32, 64, 128])


def test_fan_bounds_sampled(vac, bump):
    out = fan_bounds(vac, bump, [16, 64, 256], samples=900, seed=3)
    assert out["u_ok"] and out["v_ok"] and out["samples"] >= 900
    assert out["u_lower"] == pytest.approx(2 ** (-2 / 3))


def test_writers(vac, tmp_path):
    rows = write_fan_csv(vac, tmp_path / "fan.csv", num=11).read_text().splitlines()
    assert rows[0] == "xi,u_ac_part,v,delta_mass_flag" and len(rows) == 12
    res = vacuum_energy(vac, 1.0, [32, 64, 128])
    data = json.loads(write_energy_json(res, tmp_path / "e.json").read_text())
    assert data["closed"] == 13.0 and math.isclose(data["limit"], res.limit)
