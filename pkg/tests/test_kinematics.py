import math

import numpy as np
import pytest

from dqhc.algebra import (
    DualQuaternion,
    Quaternion,
    Twist,
    UnitDualQuaternion,
    hamilton_plus,
    manifold_residuals,
    project_arr,
    qmul_arr,
    rotation_of,
    translation_of,
    vec8,
)
from dqhc.controllers import Gains, HybridMemory, hybrid_law
from dqhc.kinematics import (
    IntegrationSettings,
    Method,
    closed_loop_rhs_oracle,
    integrate,
    kinematic_rhs,
    step,
    step_arr,
)

from conftest import random_unit_array, random_unit_dq


def exp_pure_dual(a, b):
    """exp(a + eps b) for pure 3-vectors a, b (series-exact closed form)."""
    th = np.linalg.norm(a)
    ab = a @ b
    if th < 1e-8:
        sinc, c = 1.0 - th**2 / 6, (-1.0 / 3.0)
    else:
        sinc = math.sin(th) / th
        c = (math.cos(th) - sinc) / th**2
    prim = np.concatenate([[math.cos(th)], sinc * a])
    dual = np.concatenate([[-sinc * ab], sinc * b + c * ab * a])
    return np.concatenate([prim, dual])


def constant_twist_solution(q0, tw, t):
    """q(t) = q0 exp(t w / 2)."""
    x = tw.as_array()
    e = exp_pure_dual(0.5 * t * x[1:4], 0.5 * t * x[5:8])
    p = qmul_arr(q0[:4], e[:4])
    d = qmul_arr(q0[:4], e[4:]) + qmul_arr(q0[4:], e[:4])
    return np.concatenate([p, d])


def test_settings_validation():
    with pytest.raises(ValueError):
        IntegrationSettings(dt=0)
    with pytest.raises(ValueError):
        IntegrationSettings(dt=0.1, t_final=0.05)
    assert IntegrationSettings(dt=1e-2, t_final=60).n_steps == 6000


class TestRhs:
    def test_examples(self):
        one = UnitDualQuaternion()
        assert np.all(kinematic_rhs(one, Twist()) == 0)
        out = kinematic_rhs(one, Twist([0, 0, 2], [0, 0, 0]))
        assert np.array_equal(out, [0, 0, 0, 1, 0, 0, 0, 0])

    def test_hamilton_route(self, rng):
        for _ in range(1000):
            q = random_unit_dq(rng)
            tw = Twist(rng.normal(size=3), rng.normal(size=3))
            direct = kinematic_rhs(q, tw)
            matrix = 0.5 * hamilton_plus(q) @ tw.as_array()
            assert np.allclose(direct, matrix, rtol=0, atol=1e-13)


class TestStep:
    def test_zero_twist_keeps_state(self, rng):
        q = random_unit_dq(rng)
        assert np.allclose(vec8(step(q, Twist(), 0.01)), vec8(q), rtol=0, atol=1e-15)

    def test_rotation_closed_form(self):
        q = integrate(UnitDualQuaternion(), Twist([0, 0, math.pi]), IntegrationSettings(dt=1e-3, t_final=1.0))
        assert np.allclose(rotation_of(q).as_array(), [0, 0, 0, 1], atol=1e-6)

    def test_translation_closed_form(self):
        q = integrate(UnitDualQuaternion(), Twist(v=[1, 0, 0]), IntegrationSettings(dt=1e-3, t_final=1.0))
        assert np.allclose(translation_of(q).mu, [1, 0, 0], atol=1e-6)

    def test_exp_oracle_sanity(self):
        # closed form reduces to the elementary cases
        x = constant_twist_solution(np.eye(8)[0], Twist([0, 0, math.pi]), 1.0)
        assert np.allclose(x, [0, 0, 0, 1, 0, 0, 0, 0], atol=1e-15)
        x = constant_twist_solution(np.eye(8)[0], Twist(v=[2, 0, 0]), 1.5)
        assert np.allclose(x, [1, 0, 0, 0, 0, 1.5, 0, 0], atol=1e-15)

    def test_general_constant_twist(self, rng):
        q0 = random_unit_dq(rng).as_array()
        tw = Twist([0.3, -0.7, 1.1], [0.5, 0.2, -0.4])
        x = q0
        for _ in range(1000):
            x = step_arr(x, tw.as_array(), 1e-3)
        assert np.allclose(x, constant_twist_solution(q0, tw, 1.0), atol=1e-12)

    def test_euler_is_first_order(self, rng):
        q0 = random_unit_dq(rng).as_array()
        tw = Twist([0.3, -0.7, 1.1], [0.5, 0.2, -0.4])
        exact = constant_twist_solution(q0, tw, 1.0)
        errs = []
        for n in (100, 200):
            x = q0
            for _ in range(n):
                x = step_arr(x, tw.as_array(), 1.0 / n, Method.EULER_PROJECT)
            errs.append(np.linalg.norm(x - exact))
        assert 1.7 < errs[0] / errs[1] < 2.3

    def test_projection_displacement_is_fifth_order(self, rng):
        q0 = random_unit_dq(rng).as_array()
        tw = np.array([0, 0.9, -1.3, 0.4, 0, 0.7, 0.1, -0.5])
        from dqhc.kinematics import rhs_arr

        def displacement(dt):
            k1 = rhs_arr(q0, tw)
            k2 = rhs_arr(q0 + 0.5 * dt * k1, tw)
            k3 = rhs_arr(q0 + 0.5 * dt * k2, tw)
            k4 = rhs_arr(q0 + dt * k3, tw)
            raw = q0 + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            return np.linalg.norm(project_arr(raw) - raw)

        ratio = displacement(0.1) / displacement(0.05)
        # at least O(dt^5) (ratio 32); linear skew flows give dt^6 (ratio 64)
        assert ratio >= 30


class TestClosedLoopOracle:
    def test_equilibria(self):
        for sign in (1, -1):
            q = UnitDualQuaternion.from_array(sign * np.eye(8)[0])
            for h in (1, -1):
                assert np.all(closed_loop_rhs_oracle(q, h, 1.3, 0.7) == 0)

    def test_matches_kinematics_with_hybrid_law(self, rng):
        worst = 0.0
        for _ in range(1000):
            q = random_unit_dq(rng)
            h = int(rng.choice([-1, 1]))
            k1, k2 = rng.uniform(0.1, 5, size=2)
            tw = hybrid_law(q, HybridMemory(h=h, delta=0.3), Gains(k1=k1, k2=k2))
            diff = kinematic_rhs(q, tw) - closed_loop_rhs_oracle(q, h, k1, k2)
            worst = max(worst, np.max(np.abs(diff)))
        assert worst <= 1e-12


def test_manifold_preserved_over_long_runs(rng):
    x = random_unit_array(rng, 8)
    t = 0.0
    dt = 1e-2
    for i in range(20000):
        # bounded, time-varying twists
        tw = np.zeros_like(x)
        tw[:, 1:4] = np.sin(t + np.arange(3)) * 2.0
        tw[:, 5:8] = np.cos(0.3 * t + np.arange(3))
        x = step_arr(x, tw, dt)
        t += dt
    norm_err, orth_err = manifold_residuals(x)
    assert np.max(norm_err) <= 1e-9 and np.max(orth_err) <= 1e-9
