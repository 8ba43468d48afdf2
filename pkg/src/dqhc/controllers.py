"""Feedback laws mapping a pose error to a body twist.

Every law takes an optional ``eta_measured``.  Measurement noise is modelled
on the scalar part only, so the measured value replaces ``eta`` wherever a
law reads it; the remaining components are used exactly.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np

from dqhc.algebra import (
    Twist,
    UnitDualQuaternion,
    dqconj_arr,
    dqmul_arr,
    project_arr,
)

MU_EPS = 1e-12


class Controller(str, enum.Enum):
    HYBRID = "hybrid"
    DISCONTINUOUS = "discontinuous"
    CONTINUOUS = "continuous"


@dataclass(frozen=True)
class HybridMemory:
    h: int = 1
    delta: float = 0.3

    def __post_init__(self):
        if self.h not in (-1, 1):
            raise ValueError(f"h must be -1 or +1, got {self.h!r}")
        if not 0.0 < self.delta < 1.0:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")
        object.__setattr__(self, "h", int(self.h))


@dataclass(frozen=True)
class Gains:
    """Controller gains.

    The hybrid and continuous laws read ``k1`` (rotation) and ``k2``
    (translation); the discontinuous law reads the single gain ``k``.
    """

    k1: float = 1.0
    k2: float = 1.0
    k: float = 1.0

    def __post_init__(self):
        for name in ("k1", "k2", "k"):
            if not getattr(self, name) > 0:
                raise ValueError(f"gain {name} must be strictly positive, got {getattr(self, name)}")

    @classmethod
    def single(cls, k: float) -> Gains:
        return cls(k1=k, k2=k, k=k)


# ---------------------------------------------------------------------------
# array forms, used by the simulator on stacked states


def hybrid_twist_arr(x, eta_m, h, k1, k2):
    x = np.asarray(x, dtype=float)
    eta_m = np.asarray(eta_m, dtype=float)[..., None]
    h = np.asarray(h, dtype=float)[..., None]
    out = np.zeros_like(x)
    out[..., 1:4] = -k1 * h * x[..., 1:4]
    out[..., 5:8] = -k2 * eta_m * x[..., 5:8]
    return out


def continuous_twist_arr(x, eta_m, k1, k2):
    return hybrid_twist_arr(x, eta_m, np.ones(np.shape(x)[:-1]), k1, k2)


def discontinuous_twist_arr(x, eta_m, k):
    x = np.asarray(x, dtype=float)
    eta_m = np.asarray(eta_m, dtype=float)
    mu, etap, mup = x[..., 1:4], x[..., 4], x[..., 5:8]
    # noisy readings can leave [-1, 1]
    angle = np.arccos(np.clip(eta_m, -1.0, 1.0))
    angle = np.where(eta_m >= 0.0, angle, angle - np.pi)
    nmu = np.linalg.norm(mu, axis=-1)
    safe = np.where(nmu < MU_EPS, 1.0, nmu)
    axis = np.where((nmu < MU_EPS)[..., None], 0.0, mu / safe[..., None])
    v = eta_m[..., None] * mup - etap[..., None] * mu - np.cross(mu, mup)
    out = np.zeros_like(x)
    out[..., 1:4] = -2.0 * k * angle[..., None] * axis
    out[..., 5:8] = -2.0 * k * v
    return out


def jump_arr(eta_m, h, delta):
    """Vectorized memory update; returns ``(h_plus, jumped)``."""
    eta_m = np.asarray(eta_m, dtype=float)
    h = np.asarray(h)
    jumped = h * eta_m <= -delta
    return np.where(jumped, np.sign(eta_m), h).astype(h.dtype), jumped


# ---------------------------------------------------------------------------
# value forms


def error_pose(q_measured: UnitDualQuaternion, q_desired: UnitDualQuaternion) -> UnitDualQuaternion:
    """``conj(q_measured) * q_desired``, re-projected."""
    x = dqmul_arr(dqconj_arr(q_measured.as_array()), q_desired.as_array())
    return UnitDualQuaternion.from_array(project_arr(x))


def _eta(q, eta_measured):
    return q.eta if eta_measured is None else float(eta_measured)


def hybrid_law(q_e: UnitDualQuaternion, mem: HybridMemory, g: Gains, eta_measured=None) -> Twist:
    """Twist ``-k1 h mu - eps k2 eta mu'``."""
    x = q_e.as_array()
    return Twist.from_array(hybrid_twist_arr(x, _eta(q_e, eta_measured), mem.h, g.k1, g.k2))


def continuous_law(q_e: UnitDualQuaternion, g: Gains, eta_measured=None) -> Twist:
    """Hybrid law with the memory frozen at ``h = +1``; prone to unwinding."""
    x = q_e.as_array()
    return Twist.from_array(continuous_twist_arr(x, _eta(q_e, eta_measured), g.k1, g.k2))


def discontinuous_law(q_e: UnitDualQuaternion, g: Gains, eta_measured=None) -> Twist:
    """Sign-switching law that branches on ``eta >= 0``.

    With ``mu = 0`` the rotational term is set to zero.
    """
    x = q_e.as_array()
    return Twist.from_array(discontinuous_twist_arr(x, _eta(q_e, eta_measured), g.k))


def hybrid_jump(eta_measured: float, mem: HybridMemory) -> HybridMemory:
    """Flip ``h`` to ``sign(eta)`` when ``h * eta <= -delta``."""
    if mem.h * eta_measured <= -mem.delta:
        return replace(mem, h=1 if eta_measured > 0 else -1)
    return mem
