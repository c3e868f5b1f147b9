import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from prcontact import kinematics as kin
from prcontact.dynamics import RobotModel
from prcontact.errors import PRContactError

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

GEOM = kin.RobotGeometry.symmetric()


def workspace_state(rng, geom=GEOM, branch=(1, 1, 1), radius=0.08, max_rot=0.35, min_sin=0.2):
    """Random consistent (q, x) away from singularities."""
    while True:
        r = radius * np.sqrt(rng.uniform())
        a = rng.uniform(-np.pi, np.pi)
        x = np.array([r * np.cos(a), r * np.sin(a), rng.uniform(-max_rot, max_rot)])
        try:
            q = kin.inverse_kinematics(geom, x, branch)
            J = kin.jacobian_x_qa(geom, q, x)
        except PRContactError:
            continue
        if np.min(np.abs(np.sin(q.qp))) > min_sin and np.linalg.cond(J) < 1e3:
            return q, x


@st.composite
def poses(draw, radius=0.08, max_rot=0.35):
    seed = draw(st.integers(0, 2**32 - 1))
    return workspace_state(np.random.default_rng(seed), radius=radius, max_rot=max_rot)


@pytest.fixture
def geom():
    return kin.RobotGeometry.symmetric()


@pytest.fixture
def model():
    return RobotModel()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# acceptance results, printed once at the end of the session
ACCEPTANCE = {}


def record(n, ok, detail):
    ACCEPTANCE[n] = (bool(ok), detail)
    print(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
