import numpy as np
import pytest
from hypothesis import strategies as st

from dqhc.algebra import DualQuaternion, Quaternion, UnitDualQuaternion, pose_from_rp


def random_unit_dq(rng, scale=2.0):
    r = rng.normal(size=4)
    r /= np.linalg.norm(r)
    p = rng.uniform(-scale, scale, size=3)
    return pose_from_rp(Quaternion.from_array(r), Quaternion.pure(p))


def random_unit_array(rng, n, scale=2.0):
    return np.stack([random_unit_dq(rng, scale).as_array() for _ in range(n)])


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)
vec3 = st.tuples(finite, finite, finite)
quats = st.builds(lambda e, m: Quaternion(e, m), finite, vec3)
dual_quats = st.builds(DualQuaternion, quats, quats)


@st.composite
def unit_dual_quats(draw):
    r = np.array(draw(st.tuples(finite, finite, finite, finite)))
    if np.linalg.norm(r) < 1e-3:
        r = np.array([1.0, 0, 0, 0])
    r /= np.linalg.norm(r)
    p = draw(vec3)
    return pose_from_rp(Quaternion.from_array(r), Quaternion.pure(p))


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
