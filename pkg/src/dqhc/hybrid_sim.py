"""Hybrid flow/jump executor with noise injection and Lyapunov monitoring.

Execution semantics, per sampling instant ``t_i = i * dt``:

1. draw one noisy reading ``eta_m = eta + w_i``;
2. hybrid law only: if ``h * eta_m <= -delta`` jump (``h <- sign(eta_m)``);
   jumps take priority over flow on the overlap ``h * eta_m == -delta``;
3. evaluate the twist from the same reading and log the sample;
4. flow for one step with the twist held constant.

Runs are vectorized over a leading batch axis so that Monte-Carlo studies
cost one numpy pass per step.  A single :func:`run` is a batch of one, so a
run's trajectory does not depend on what it was batched with.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from dqhc.algebra import (
    DualQuaternion,
    UnitDualQuaternion,
    dqconj_arr,
    dqmul_arr,
    project_arr,
)
from dqhc.controllers import (
    Controller,
    continuous_twist_arr,
    discontinuous_twist_arr,
    hybrid_twist_arr,
    jump_arr,
)
from dqhc.kinematics import IntegrationSettings, step_arr

log = logging.getLogger(__name__)

V_TOL = 1e-4
DIVERGENCE_BOUND = 1e6


class NonFiniteState(RuntimeError):
    """State left the divergence guard box or became non-finite."""


class NoiseKind(str, enum.Enum):
    NONE = "NONE"
    GAUSSIAN_ETA = "GAUSSIAN_ETA"


@dataclass(frozen=True)
class NoiseModel:
    """Additive Gaussian noise on the measured scalar part ``eta``.

    ``sigma`` is a standard deviation; see :meth:`from_variance`.
    """

    kind: NoiseKind = NoiseKind.NONE
    sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", NoiseKind(self.kind))
        if not self.sigma >= 0:
            raise ValueError(f"sigma must be >= 0, got {self.sigma}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError(f"seed must fit in 64 bits, got {self.seed}")
        object.__setattr__(self, "seed", int(self.seed))

    @classmethod
    def gaussian(cls, sigma, seed=0):
        return cls(NoiseKind.GAUSSIAN_ETA, float(sigma), seed)

    @classmethod
    def from_variance(cls, variance, seed=0):
        return cls.gaussian(float(np.sqrt(variance)), seed)

    @property
    def active(self) -> bool:
        return self.kind == NoiseKind.GAUSSIAN_ETA and self.sigma > 0

    def sample(self, n, run_index=0) -> np.ndarray:
        """Noise sequence of length ``n`` for stream ``(seed, run_index)``."""
        if not self.active:
            return np.zeros(n)
        rng = np.random.default_rng(np.random.SeedSequence([self.seed, run_index]))
        return self.sigma * rng.standard_normal(n)


def lyapunov(q: DualQuaternion, h: int) -> float:
    """``V = 2 (1 - h eta) + eta'^2 + |mu'|^2``."""
    return float(lyapunov_arr(q.as_array(), h))


def lyapunov_arr(x, h):
    x = np.asarray(x, dtype=float)
    return 2.0 * (1.0 - h * x[..., 0]) + x[..., 4] ** 2 + np.sum(x[..., 5:8] ** 2, axis=-1)


class TrajectoryRecord(NamedTuple):
    t: float
    j: int
    h: int
    eta: float
    mu1: float
    mu2: float
    mu3: float
    etap: float
    mup1: float
    mup2: float
    mup3: float
    V: float
    twist_norm: float
    jump_flag: int


CSV_COLUMNS = TrajectoryRecord._fields


@dataclass(frozen=True)
class JumpEvent:
    """One executed jump.

    ``V_before``/``V_after`` use the true state; the ``*_measured`` pair
    evaluates the Lyapunov function on the reading the controller acted on.
    """

    t: float
    j: int
    h_before: int
    eta: float
    eta_measured: float
    V_before: float
    V_after: float
    V_measured_before: float
    V_measured_after: float

    @property
    def delta_V(self) -> float:
        return self.V_after - self.V_before

    @property
    def delta_V_measured(self) -> float:
        return self.V_measured_after - self.V_measured_before


@dataclass
class Trajectory:
    """Column-oriented sample log of one run."""

    t: np.ndarray
    j: np.ndarray
    h: np.ndarray
    x: np.ndarray  # (n, 8) pose error in vec8 order
    eta_measured: np.ndarray
    V: np.ndarray
    twist: np.ndarray  # (n, 8)
    jump_flag: np.ndarray

    def __len__(self):
        return len(self.t)

    @property
    def twist_norm(self) -> np.ndarray:
        return np.linalg.norm(self.twist, axis=-1)

    def columns(self) -> dict:
        cols = {"t": self.t, "j": self.j, "h": self.h}
        for i, name in enumerate(CSV_COLUMNS[3:11]):
            cols[name] = self.x[:, i]
        cols["V"] = self.V
        cols["twist_norm"] = self.twist_norm
        cols["jump_flag"] = self.jump_flag
        return cols

    def records(self):
        cols = self.columns()
        for i in range(len(self)):
            yield TrajectoryRecord(*(c[i].item() for c in cols.values()))


@dataclass
class RunSummary:
    final_pose: np.ndarray
    jumps: int
    sign_flips: int
    convergence_time: float | None
    terminal_V: float
    projection_displacement: float = 0.0
    # changes of the logged switch signal h (jumps, or branch changes of the
    # discontinuous law)
    switches: int = 0

    @property
    def terminal_sign(self) -> int:
        return 1 if self.final_pose[0] >= 0 else -1

    @property
    def distance_to_equilibria(self) -> float:
        e = np.zeros(8)
        e[0] = 1.0
        return float(min(np.linalg.norm(self.final_pose - e), np.linalg.norm(self.final_pose + e)))


@dataclass
class RunResult:
    trajectory: Trajectory
    summary: RunSummary
    jumps: list = field(default_factory=list)
    label: str = ""
    seed: int = 0


# ---------------------------------------------------------------------------
# batch engine


def count_sign_flips(w) -> int:
    """Number of samples where the rotational twist reverses direction."""
    w = np.asarray(w)
    return int(np.sum(np.einsum("ij,ij->i", w[1:], w[:-1]) < 0.0))


def convergence_time(t, V, tol=V_TOL):
    """First time after which ``V`` stays below ``tol``; ``None`` if it never does."""
    above = np.nonzero(V >= tol)[0]
    if len(above) == 0:
        return float(t[0])
    last = above[-1]
    if last + 1 >= len(t):
        return None
    return float(t[last + 1])


def simulate_batch(
    x0,
    h0,
    controller,
    gains,
    delta,
    noise,
    settings: IntegrationSettings,
):
    """Run a batch of closed-loop simulations.

    :param x0: ``(N, 8)`` initial pose errors, already on the manifold
    :param h0: ``(N,)`` initial memory states
    :param controller: :class:`Controller`
    :param gains: :class:`~dqhc.controllers.Gains`
    :param delta: scalar or ``(N,)`` hysteresis widths (hybrid only)
    :param noise: ``(N, n_steps + 1)`` additive noise on eta
    :return: dict of stacked arrays plus a list of jump events per run
    """
    controller = Controller(controller)
    x = np.array(x0, dtype=float).reshape(-1, 8)
    n_runs = x.shape[0]
    n = settings.n_steps
    dt = settings.dt
    h = np.broadcast_to(np.asarray(h0, dtype=np.int64), (n_runs,)).copy()
    if controller == Controller.CONTINUOUS:
        h[:] = 1
    delta = np.broadcast_to(np.asarray(delta, dtype=float), (n_runs,))
    noise = np.asarray(noise, dtype=float).reshape(n_runs, n + 1)

    xs = np.empty((n + 1, n_runs, 8))
    hs = np.empty((n + 1, n_runs), dtype=np.int64)
    js = np.empty((n + 1, n_runs), dtype=np.int64)
    ems = np.empty((n + 1, n_runs))
    tws = np.empty((n + 1, n_runs, 8))
    flags = np.zeros((n + 1, n_runs), dtype=np.int64)
    j = np.zeros(n_runs, dtype=np.int64)
    events = [[] for _ in range(n_runs)]

    for i in range(n + 1):
        if not np.all(np.isfinite(x)) or np.any(np.abs(x) > DIVERGENCE_BOUND):
            bad = np.nonzero(~np.all(np.isfinite(x) & (np.abs(x) <= DIVERGENCE_BOUND), axis=1))[0]
            raise NonFiniteState(f"state left the guard box at t = {i * dt:g} (runs {bad.tolist()})")
        eta_m = x[:, 0] + noise[:, i]
        if controller == Controller.HYBRID:
            h_new, jumped = jump_arr(eta_m, h, delta)
            if np.any(jumped):
                for r in np.nonzero(jumped)[0]:
                    events[r].append(_jump_event(i * dt, j[r], x[r], eta_m[r], h[r], h_new[r]))
                # after a jump h * eta_m = |eta_m| > 0, so a second jump cannot fire
                assert np.all(h_new[jumped] * eta_m[jumped] > 0)
                j = j + jumped
                flags[i] = jumped
                h = h_new
            tw = hybrid_twist_arr(x, eta_m, h, gains.k1, gains.k2)
        elif controller == Controller.CONTINUOUS:
            tw = continuous_twist_arr(x, eta_m, gains.k1, gains.k2)
        else:
            tw = discontinuous_twist_arr(x, eta_m, gains.k)
            # logged h is the active branch of the switching law
            h = np.where(eta_m >= 0.0, 1, -1)
        xs[i] = x
        hs[i] = h
        js[i] = j
        ems[i] = eta_m
        tws[i] = tw
        if i < n:
            x = step_arr(x, tw, dt, settings.method)

    t = np.arange(n + 1) * dt
    V = lyapunov_arr(xs, hs)
    return {
        "t": t,
        "x": xs,
        "h": hs,
        "j": js,
        "eta_measured": ems,
        "twist": tws,
        "jump_flag": flags,
        "V": V,
        "events": events,
    }


def _jump_event(t, j, x, eta_m, h_before, h_after):
    eta = float(x[0])
    xm = x.copy()
    xm[0] = eta_m
    return JumpEvent(
        t=float(t),
        j=int(j),
        h_before=int(h_before),
        eta=eta,
        eta_measured=float(eta_m),
        V_before=float(lyapunov_arr(x, h_before)),
        V_after=float(lyapunov_arr(x, h_after)),
        V_measured_before=float(lyapunov_arr(xm, h_before)),
        V_measured_after=float(lyapunov_arr(xm, h_after)),
    )


def _unpack(out, r, label="", seed=0, displacement=0.0):
    traj = Trajectory(
        t=out["t"],
        j=out["j"][:, r],
        h=out["h"][:, r],
        x=out["x"][:, r],
        eta_measured=out["eta_measured"][:, r],
        V=out["V"][:, r],
        twist=out["twist"][:, r],
        jump_flag=out["jump_flag"][:, r],
    )
    summary = RunSummary(
        final_pose=traj.x[-1].copy(),
        jumps=int(traj.j[-1]),
        sign_flips=count_sign_flips(traj.twist[:, 1:4]),
        convergence_time=convergence_time(traj.t, traj.V),
        terminal_V=float(traj.V[-1]),
        projection_displacement=displacement,
        switches=int(np.count_nonzero(np.diff(traj.h))),
    )
    return RunResult(traj, summary, out["events"][r], label, seed)


# ---------------------------------------------------------------------------
# scenario-level entry points


def initial_error(scenario):
    """Project the scenario poses and form the initial pose error.

    Returns ``(x0, displacement)`` where ``displacement`` is the distance the
    projection moved ``q_initial``.
    """
    qi = np.asarray(scenario.q_initial.as_array())
    qi_p = project_arr(qi)
    qd_p = project_arr(np.asarray(scenario.q_desired.as_array()))
    displacement = float(np.linalg.norm(qi_p - qi))
    if displacement > 0:
        log.info("%s: q_initial projected onto manifold (moved %.3e)", scenario.label, displacement)
    x0 = project_arr(dqmul_arr(dqconj_arr(qi_p), qd_p))
    return x0, displacement


def _seeds(scenario, seeds):
    return [scenario.noise.seed] if seeds is None else [int(s) for s in seeds]


def run_batch(scenario, seeds: Sequence[int] | None = None, deltas: Sequence[float] | None = None):
    """Run ``scenario`` once per (delta, seed) pair in one vectorized batch.

    The noise stream of each run is derived from ``(seed, 0)``, so a run here
    reproduces ``run(scenario with that seed and delta)`` exactly.
    """
    seeds = _seeds(scenario, seeds)
    if deltas is None:
        deltas = [np.nan if scenario.delta is None else scenario.delta]
    else:
        deltas = [float(d) for d in deltas]
    x0, disp = initial_error(scenario)
    n = scenario.integration.n_steps
    pairs = [(d, s) for d in deltas for s in seeds]
    noise = np.stack([scenario.noise_with_seed(s).sample(n + 1) for _, s in pairs])
    out = simulate_batch(
        np.tile(x0, (len(pairs), 1)),
        scenario.h_initial,
        scenario.controller,
        scenario.gains,
        np.array([d for d, _ in pairs]),
        noise,
        scenario.integration,
    )
    return [_unpack(out, r, scenario.label, s, disp) for r, (_, s) in enumerate(pairs)]


def run(scenario) -> RunResult:
    """Simulate one scenario; see the module docstring for the semantics."""
    return run_batch(scenario)[0]


@dataclass
class SweepRow:
    delta: float
    jumps: list
    convergence_times: list

    @property
    def median_jumps(self) -> float:
        return float(np.median(self.jumps))

    @property
    def median_convergence_time(self) -> float | None:
        ct = [c for c in self.convergence_times if c is not None]
        if len(ct) < len(self.convergence_times):
            return None
        return float(np.median(ct))


def sweep_delta(base, deltas, seeds: Sequence[int] | None = None) -> list:
    """Jump count and convergence time per hysteresis width.

    Every delta sees the same seeds (default: the base scenario's seed).
    Rows are sorted by delta.
    """
    if Controller(base.controller) != Controller.HYBRID:
        raise ValueError("sweep_delta needs a hybrid-controller scenario")
    deltas = sorted(float(d) for d in deltas)
    for d in deltas:
        if not 0.0 < d < 1.0:
            raise ValueError(f"delta must lie in (0, 1), got {d}")
    seeds = _seeds(base, seeds)
    results = run_batch(base, seeds=seeds, deltas=deltas)
    rows = []
    for k, d in enumerate(deltas):
        chunk = results[k * len(seeds):(k + 1) * len(seeds)]
        rows.append(
            SweepRow(
                d,
                [r.summary.jumps for r in chunk],
                [r.summary.convergence_time for r in chunk],
            )
        )
    return rows


def unwinding_probe(delta_small, delta_large, k, q0, t_final=20.0, dt=1e-2):
    """Terminal equilibrium sign for a small and a large hysteresis width.

    Both runs start from ``q0`` with ``h = +1``, no noise, hybrid law with
    ``k1 = k2 = k``.
    """
    from dqhc.scenarios import Scenario

    base = Scenario(
        controller=Controller.HYBRID,
        k=k,
        delta=delta_small,
        q_initial=q0 if isinstance(q0, DualQuaternion) else DualQuaternion.from_array(q0),
        q_desired=UnitDualQuaternion(),
        h_initial=1,
        integration=IntegrationSettings(dt=dt, t_final=t_final),
        label="unwinding_probe",
    )
    small, large = run_batch(base, deltas=[delta_small, delta_large])
    return small.summary.terminal_sign, large.summary.terminal_sign
