import pytest
from hypothesis import HealthCheck, settings

from slicfan.cavitation3d import shoot_profile
from slicfan.constitutive import make_stored_energy, make_stress_law
from slicfan.crack1d import solve_fan
from slicfan.mollify import make_mollifier
from slicfan.vacuum1d import make_vacuum_fan

settings.register_profile("default", max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# criterion number -> (verdict, detail), filled by tests/test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in range(1, 11):
        ok, detail = ACCEPTANCE.get(k, (False, "not run or errored"))
        terminalreporter.write_line(f"CRITERION {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture(scope="session")
def bump():
    return make_mollifier("bump")


@pytest.fixture(scope="session")
def bump0():
    return make_mollifier("bump_zero_center")


@pytest.fixture(scope="session", params=["bump", "bump_zero_center"])
def kernel(request):
    return make_mollifier(request.param)


@pytest.fixture(scope="session")
def crack_sat():
    return solve_fan(make_stress_law("saturating"), 4.0, 2.0)


@pytest.fixture(scope="session")
def crack_nonsat():
    return solve_fan(make_stress_law("nonsaturating"), 4.0, 2.0)


@pytest.fixture(scope="session")
def vac():
    return make_vacuum_fan(1.0, 4.0, 2.0)


@pytest.fixture(scope="session")
def recip_profile():
    return shoot_profile(make_stored_energy("reciprocal"), 2.0)


@pytest.fixture(scope="session")
def power_profile():
    return shoot_profile(make_stored_energy("power"), 2.0)


@pytest.fixture(scope="session")
def superlinear_profile():
    return shoot_profile(make_stored_energy("superlinear"), 1.5)
