from dataclasses import replace

import numpy as np
import pytest

from dqhc.algebra import DualQuaternion, Quaternion, UnitDualQuaternion, pose_from_rp
from dqhc.controllers import Controller, Gains
from dqhc.hybrid_sim import (
    NoiseKind,
    NoiseModel,
    NonFiniteState,
    TrajectoryRecord,
    convergence_time,
    count_sign_flips,
    lyapunov,
    lyapunov_arr,
    run,
    run_batch,
    simulate_batch,
    sweep_delta,
    unwinding_probe,
)
from dqhc.kinematics import IntegrationSettings
from dqhc.scenarios import Scenario, near_antipode, preset

from conftest import random_unit_dq


def scenario(q0, controller=Controller.HYBRID, **kw):
    kw.setdefault("k", 1.0)
    if controller != Controller.HYBRID:
        kw["delta"] = None
    kw.setdefault("integration", IntegrationSettings(dt=1e-2, t_final=20.0))
    return Scenario(controller=controller, q_initial=q0, **kw)


class TestLyapunov:
    def test_examples(self):
        one = UnitDualQuaternion()
        assert lyapunov(one, 1) == 0.0
        assert lyapunov(-one, 1) == 4.0
        q = UnitDualQuaternion.from_array([0, 1, 0, 0, 0.5, 0, 0, 0])
        assert lyapunov(q, 1) == pytest.approx(2.25, abs=1e-15)

    def test_positive_definite(self, rng):
        for _ in range(500):
            q = random_unit_dq(rng)
            for h in (1, -1):
                assert lyapunov(q, h) >= 0
        assert lyapunov(-UnitDualQuaternion(), -1) == 0.0


class TestNoise:
    def test_variance_conversion(self):
        assert NoiseModel.from_variance(0.16).sigma == pytest.approx(0.4)
        assert NoiseModel.from_variance(0.09).sigma == pytest.approx(0.3)

    def test_deterministic_streams(self):
        n = NoiseModel.gaussian(0.1, seed=5)
        assert np.array_equal(n.sample(100), n.sample(100))
        assert not np.array_equal(n.sample(100, run_index=0), n.sample(100, run_index=1))
        assert not np.array_equal(n.sample(100), replace(n, seed=6).sample(100))

    def test_none_is_zero(self):
        assert np.all(NoiseModel().sample(10) == 0)
        assert NoiseModel().kind == NoiseKind.NONE

    def test_validation(self):
        with pytest.raises(ValueError):
            NoiseModel.gaussian(-0.1)
        with pytest.raises(ValueError):
            NoiseModel.gaussian(0.1, seed=-1)


def test_helpers():
    t = np.arange(5.0)
    assert convergence_time(t, np.array([1, 1e-5, 1, 1e-5, 1e-6])) == 3.0
    assert convergence_time(t, np.array([1, 1, 1, 1, 1.0])) is None
    assert convergence_time(t, np.zeros(5)) == 0.0
    w = np.array([[1, 0, 0], [2, 0, 0], [-1, 0, 0], [0, 0, 0], [1, 0, 0]])
    assert count_sign_flips(w) == 1


class TestRun:
    @pytest.mark.parametrize("controller", list(Controller))
    def test_rest_stays_at_rest(self, controller):
        r = run(scenario(UnitDualQuaternion(), controller))
        assert np.all(r.trajectory.twist == 0)
        assert r.summary.jumps == 0
        assert np.all(r.trajectory.V == 0)

    def test_single_initial_jump_then_monotone(self):
        q0 = near_antipode(-0.9)
        r = run(scenario(q0, delta=0.3, h_initial=1))
        assert r.summary.jumps == 1
        assert len(r.jumps) == 1 and r.jumps[0].t == 0.0
        assert r.trajectory.jump_flag[0] == 1
        assert np.all(np.diff(r.trajectory.V) <= 1e-8)
        assert r.summary.terminal_V < 1e-4
        assert r.summary.terminal_sign == -1

    def test_record_consistency(self, rng):
        r = run(scenario(random_unit_dq(rng), noise=NoiseModel.gaussian(0.2, 3)))
        recs = list(r.trajectory.records())
        assert len(recs) == len(r.trajectory) == 2001
        for rec in recs[::97]:
            assert isinstance(rec, TrajectoryRecord)
            x = np.array([rec.eta, rec.mu1, rec.mu2, rec.mu3, rec.etap, rec.mup1, rec.mup2, rec.mup3])
            assert rec.V == pytest.approx(float(lyapunov_arr(x, rec.h)), abs=1e-12)
        t = np.array([rec.t for rec in recs])
        j = np.array([rec.j for rec in recs])
        assert np.all(np.diff(t) > 0) and np.all(np.diff(j) >= 0)

    def test_flow_and_jump_sets_respected(self, rng):
        r = run(scenario(random_unit_dq(rng), delta=0.2, noise=NoiseModel.gaussian(0.3, 11)))
        tr = r.trajectory
        # after any jump decision the logged sample lies in the flow set
        assert np.all(tr.h * tr.eta_measured >= -0.2)
        assert r.summary.jumps == int(tr.jump_flag.sum()) > 0

    def test_determinism(self, rng):
        s = scenario(random_unit_dq(rng), noise=NoiseModel.gaussian(0.2, 42))
        a, b = run(s), run(s)
        for name in ("x", "h", "j", "V", "twist"):
            assert np.array_equal(getattr(a.trajectory, name), getattr(b.trajectory, name))

    def test_batch_matches_single_runs(self, rng):
        s = scenario(random_unit_dq(rng), noise=NoiseModel.gaussian(0.3, 0))
        batch = run_batch(s, seeds=[4, 9, 2])
        for r, seed in zip(batch, [4, 9, 2]):
            single = run(s.with_seed(seed))
            assert np.array_equal(r.trajectory.x, single.trajectory.x)
            assert r.summary.jumps == single.summary.jumps

    def test_divergence_guard(self):
        x0 = np.array([[1, 0, 0, 0, 0, 2e6, 0, 0.0]])
        with pytest.raises(NonFiniteState):
            simulate_batch(x0, 1, Controller.HYBRID, Gains(), 0.3, np.zeros((1, 11)),
                           IntegrationSettings(dt=0.1, t_final=1.0))

    def test_desired_pose_regulation(self, rng):
        qd = random_unit_dq(rng)
        qm = random_unit_dq(rng)
        r = run(scenario(qm, q_desired=qd, integration=IntegrationSettings(t_final=40.0)))
        assert r.summary.distance_to_equilibria < 1e-3


class TestLyapunovMonitor:
    def test_noise_free_flow_decrease_and_jump_identity(self, rng):
        for _ in range(20):
            q0 = random_unit_dq(rng)
            h0 = int(rng.choice([-1, 1]))
            r = run(scenario(q0, delta=0.3, h_initial=h0, k1=0.8, k2=1.4, k=None))
            V = r.trajectory.V
            flow = r.trajectory.jump_flag[1:] == 0
            assert np.all(np.diff(V)[flow] <= 1e-8)
            assert r.summary.jumps <= 1
            for ev in r.jumps:
                assert ev.delta_V == pytest.approx(4 * ev.h_before * ev.eta_measured, abs=1e-12)
                assert ev.delta_V < 0

    def test_noisy_jump_identity(self, rng):
        sigma = 0.2
        rs = run_batch(scenario(random_unit_dq(rng), delta=0.1, noise=NoiseModel.gaussian(sigma)),
                       seeds=range(10))
        events = [ev for r in rs for ev in r.jumps]
        assert events
        for ev in events:
            # identity holds for the true state and for the measured reading
            assert ev.delta_V == pytest.approx(4 * ev.h_before * ev.eta, abs=1e-12)
            assert ev.delta_V_measured == pytest.approx(4 * ev.h_before * ev.eta_measured, abs=1e-12)
            assert ev.delta_V_measured <= -4 * 0.1 + 1e-12
            assert ev.delta_V < -4 * 0.1 + 4 * 6 * sigma

    def test_robustness_small_noise(self, rng):
        # reach and remain in {V <= 0.2} from a compact set of initial poses
        starts = [random_unit_dq(rng, scale=1.5) for _ in range(30)]
        for k, q0 in enumerate(starts):
            s = scenario(q0, delta=0.3, noise=NoiseModel.gaussian(0.05, k),
                         integration=IntegrationSettings(t_final=30.0))
            V = run(s).trajectory.V
            inside = V <= 0.2
            first_out_after = np.nonzero(~inside)[0]
            assert len(first_out_after) == 0 or first_out_after[-1] < len(V) - 1


class TestSweep:
    def test_noise_free_at_most_one_jump(self):
        base = scenario(near_antipode(-0.7), delta=0.3)
        rows = sweep_delta(base, [0.9, 0.05, 0.5])
        assert [r.delta for r in rows] == [0.05, 0.5, 0.9]
        assert all(max(r.jumps) <= 1 for r in rows)
        # hj = -0.7 jumps for delta <= 0.7 only
        assert [r.jumps[0] for r in rows] == [1, 1, 0]

    def test_invalid_delta(self):
        with pytest.raises(ValueError):
            sweep_delta(scenario(UnitDualQuaternion()), [0.3, 1.0])

    def test_requires_hybrid(self):
        with pytest.raises(ValueError):
            sweep_delta(scenario(UnitDualQuaternion(), Controller.CONTINUOUS), [0.3])

    def test_identical_seed_across_deltas(self):
        base = replace(preset("fig3_compare"), integration=IntegrationSettings(t_final=5.0))
        rows = sweep_delta(base, [0.05, 0.3], seeds=[7, 8])
        assert len(rows) == 2 and all(len(r.jumps) == 2 for r in rows)


class TestUnwinding:
    def test_small_delta_short_path(self):
        small, _ = unwinding_probe(0.15, 0.95, 5.0, near_antipode(-0.98))
        assert small == -1

    def test_large_delta_long_path(self):
        small, large = unwinding_probe(0.15, 0.95, 5.0, near_antipode(-0.9))
        assert (small, large) == (-1, 1)

    def test_large_delta_still_jumps_past_band(self):
        _, large = unwinding_probe(0.15, 0.95, 5.0, near_antipode(-0.99))
        assert large == -1

    def test_continuous_law_unwinds(self):
        r = run(scenario(near_antipode(-0.99), Controller.CONTINUOUS, integration=IntegrationSettings(t_final=30)))
        assert r.summary.terminal_sign == 1
        # eta travels the long way across zero
        assert np.any(r.trajectory.x[:, 0] > 0) and r.trajectory.x[0, 0] < -0.9
        assert r.summary.distance_to_equilibria < 1e-3
