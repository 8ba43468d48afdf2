"""Scenario configuration, JSON (de)serialization and the built-in presets.

Config files are JSON objects.  Pose fields are objects keyed with the CSV
column names (``eta, mu1, mu2, mu3, etap, mup1, mup2, mup3``); a plain list of
eight numbers in the same order is also accepted.  Noise is given by exactly
one of ``noise_sigma`` (standard deviation) or ``noise_variance``.

Example::

    {
      "label": "demo",
      "controller": "hybrid",
      "k": 2.0,
      "delta": 0.3,
      "noise_sigma": 0.1,
      "seed": 7,
      "q_initial": {"eta": 0.001, "mu1": 0.78, "mu2": 0.57, "mu3": 0.28,
                    "etap": -1.28, "mup1": 1.5, "mup2": -2.44, "mup3": 0.77},
      "h_initial": 1,
      "dt": 0.01,
      "t_final": 60.0
    }
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from dqhc.algebra import DualQuaternion, Quaternion, UnitDualQuaternion, pose_from_rp
from dqhc.controllers import Controller, Gains
from dqhc.hybrid_sim import NoiseKind, NoiseModel
from dqhc.kinematics import IntegrationSettings, Method

POSE_KEYS = ("eta", "mu1", "mu2", "mu3", "etap", "mup1", "mup2", "mup3")
DEFAULT_HORIZON = 60.0


class ConfigError(ValueError):
    """Invalid scenario configuration."""


class UnknownPreset(KeyError):
    pass


@dataclass(frozen=True)
class Scenario:
    controller: Controller = Controller.HYBRID
    k: float | None = None
    k1: float | None = None
    k2: float | None = None
    delta: float | None = 0.3
    noise: NoiseModel = field(default_factory=NoiseModel)
    q_initial: DualQuaternion = field(default_factory=DualQuaternion.identity)
    q_desired: DualQuaternion = field(default_factory=DualQuaternion.identity)
    h_initial: int = 1
    integration: IntegrationSettings = field(default_factory=IntegrationSettings)
    label: str = ""
    # hysteresis widths studied together (sweep / unwinding presets)
    deltas: tuple = ()

    def __post_init__(self):
        try:
            object.__setattr__(self, "controller", Controller(self.controller))
        except ValueError:
            raise ConfigError(f"unknown controller {self.controller!r}") from None
        object.__setattr__(self, "deltas", tuple(float(d) for d in self.deltas))
        self.validate()

    def validate(self):
        c = self.controller
        if c == Controller.HYBRID:
            if self.delta is None:
                raise ConfigError("delta is required for the hybrid controller")
        elif self.delta is not None:
            raise ConfigError(f"delta only applies to the hybrid controller, not {c.value}")
        for d in ([self.delta] if self.delta is not None else []) + list(self.deltas):
            if not 0.0 < d < 1.0:
                raise ConfigError(f"delta must lie in (0, 1), got {d}")
        if c == Controller.DISCONTINUOUS and self.k is None:
            raise ConfigError("gain k is required for the discontinuous controller")
        if c != Controller.DISCONTINUOUS and self.k is None and (self.k1 is None or self.k2 is None):
            raise ConfigError("give either k or both k1 and k2")
        for name in ("k", "k1", "k2"):
            val = getattr(self, name)
            if val is not None and not val > 0:
                raise ConfigError(f"gain {name} must be strictly positive, got {val}")
        if self.h_initial not in (-1, 1):
            raise ConfigError(f"h_initial must be -1 or +1, got {self.h_initial}")
        if np.linalg.norm(self.q_initial.as_array()[:4]) <= 1e-12:
            raise ConfigError("q_initial has a zero primary part")
        if np.linalg.norm(self.q_desired.as_array()[:4]) <= 1e-12:
            raise ConfigError("q_desired has a zero primary part")

    @property
    def gains(self) -> Gains:
        k1 = self.k1 if self.k1 is not None else self.k
        k2 = self.k2 if self.k2 is not None else self.k
        k = self.k if self.k is not None else k1
        return Gains(k1=k1, k2=k2, k=k)

    def noise_with_seed(self, seed: int) -> NoiseModel:
        return replace(self.noise, seed=int(seed))

    def with_seed(self, seed: int) -> Scenario:
        return replace(self, noise=self.noise_with_seed(seed))

    def with_controller(self, controller, delta: float | None = None) -> Scenario:
        controller = Controller(controller)
        if controller == Controller.HYBRID:
            d = delta if delta is not None else (self.delta if self.delta is not None else 0.3)
        else:
            d = None
        k = self.k if self.k is not None else self.gains.k
        return replace(self, controller=controller, delta=d, k=k)

    # -- serialization -----------------------------------------------------

    def to_dict(self) -> dict:
        out = {"label": self.label, "controller": self.controller.value}
        for name in ("k", "k1", "k2", "delta"):
            if getattr(self, name) is not None:
                out[name] = getattr(self, name)
        if self.deltas:
            out["deltas"] = list(self.deltas)
        if self.noise.kind == NoiseKind.GAUSSIAN_ETA:
            out["noise_sigma"] = self.noise.sigma
        out["seed"] = self.noise.seed
        out["q_initial"] = _pose_to_dict(self.q_initial)
        out["q_desired"] = _pose_to_dict(self.q_desired)
        out["h_initial"] = self.h_initial
        out["dt"] = self.integration.dt
        out["t_final"] = self.integration.t_final
        out["method"] = self.integration.method.value
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _pose_to_dict(dq: DualQuaternion) -> dict:
    return {k: float(v) for k, v in zip(POSE_KEYS, dq.as_array())}


def _pose_from(value, name) -> DualQuaternion:
    if isinstance(value, dict):
        unknown = set(value) - set(POSE_KEYS)
        if unknown:
            raise ConfigError(f"{name}: unknown keys {sorted(unknown)}")
        arr = [float(value.get(k, 0.0)) for k in POSE_KEYS]
    elif isinstance(value, (list, tuple)) and len(value) == 8:
        arr = [float(v) for v in value]
    else:
        raise ConfigError(f"{name} must be an object keyed by {POSE_KEYS} or a list of 8 numbers")
    if not all(math.isfinite(v) for v in arr):
        raise ConfigError(f"{name} has non-finite components")
    return DualQuaternion.from_array(arr)


_KNOWN_KEYS = {
    "label", "controller", "k", "k1", "k2", "delta", "deltas", "noise_sigma",
    "noise_variance", "seed", "q_initial", "q_desired", "h_initial", "dt",
    "t_final", "method", "preset",
}


def scenario_from_dict(cfg: dict, seed: int | None = None) -> Scenario:
    """Build a :class:`Scenario` from a parsed config object.

    A ``"preset"`` key starts from that preset and overrides the given fields.
    """
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(cfg) - _KNOWN_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    base = preset(cfg["preset"]).to_dict() if "preset" in cfg else {}
    if "noise_sigma" in cfg or "noise_variance" in cfg:
        base.pop("noise_sigma", None)
    merged = {**base, **{k: v for k, v in cfg.items() if k != "preset"}}
    if "noise_sigma" in merged and "noise_variance" in merged:
        raise ConfigError("give exactly one of noise_sigma or noise_variance")
    if "controller" in cfg and "delta" not in cfg and merged.get("controller") != "hybrid":
        merged.pop("delta", None)

    try:
        s = int(merged.get("seed", 0)) if seed is None else int(seed)
        if "noise_sigma" in merged:
            noise = NoiseModel.gaussian(float(merged["noise_sigma"]), s)
        elif "noise_variance" in merged:
            var = float(merged["noise_variance"])
            if var < 0:
                raise ConfigError(f"noise_variance must be >= 0, got {var}")
            noise = NoiseModel.from_variance(var, s)
        else:
            noise = NoiseModel(NoiseKind.NONE, 0.0, s)
        integration = IntegrationSettings(
            dt=float(merged.get("dt", 1e-2)),
            t_final=float(merged.get("t_final", DEFAULT_HORIZON)),
            method=Method(merged.get("method", Method.RK4_PROJECT.value)),
        )
        controller = merged.get("controller", "hybrid")
        delta = merged.get("delta", 0.3 if controller == "hybrid" else None)
        return Scenario(
            controller=controller,
            k=_opt_float(merged.get("k")),
            k1=_opt_float(merged.get("k1")),
            k2=_opt_float(merged.get("k2")),
            delta=_opt_float(delta),
            noise=noise,
            q_initial=_pose_from(merged.get("q_initial", [1, 0, 0, 0, 0, 0, 0, 0]), "q_initial"),
            q_desired=_pose_from(merged.get("q_desired", [1, 0, 0, 0, 0, 0, 0, 0]), "q_desired"),
            h_initial=int(merged.get("h_initial", 1)),
            integration=integration,
            label=str(merged.get("label", "")),
            deltas=tuple(merged.get("deltas", ())),
        )
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def _opt_float(v):
    return None if v is None else float(v)


def load_config(path, seed: int | None = None) -> Scenario:
    try:
        cfg = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return scenario_from_dict(cfg, seed=seed)


# ---------------------------------------------------------------------------
# presets

FIG12_Q0 = (0.001, 0.72, 0.06, 0.69, -55.15, -2.52, 36.71, -0.59)
FIG3_Q0 = (0.001, 0.78, 0.57, 0.28, -1.28, 1.50, -2.44, 0.77)
REGULATION_Q0 = (-0.31, -0.67, 0.67, -0.05, -0.06, -0.31, -0.31, 0.40)
REGULATION_QD = (0.0, 0.707, 0.707, 0.0, 0.28, -0.38, 0.38, 0.28)
SWEEP_DELTAS = (0.05, 0.15, 0.3, 0.6, 0.9)
UNWINDING_DELTAS = (0.15, 0.95)


def near_antipode(eta0=-0.9, axis=(0.6, 0.0, 0.8), translation=(0.5, -0.3, 0.2)) -> UnitDualQuaternion:
    """Pose with scalar part ``eta0`` about ``axis``, followed by ``translation``."""
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    r = Quaternion(eta0, math.sqrt(1.0 - eta0**2) * axis)
    return pose_from_rp(r, Quaternion.pure(translation))


def _dq(values):
    return DualQuaternion.from_array(values)


def _fig12(controller):
    return Scenario(
        controller=controller,
        k=0.08,
        delta=0.3 if controller == Controller.HYBRID else None,
        noise=NoiseModel.from_variance(0.16),
        q_initial=_dq(FIG12_Q0),
        integration=IntegrationSettings(t_final=DEFAULT_HORIZON),
    )


def _fig3():
    return Scenario(
        controller=Controller.HYBRID,
        k=2.0,
        delta=0.3,
        noise=NoiseModel.gaussian(0.1),
        q_initial=_dq(FIG3_Q0),
        integration=IntegrationSettings(t_final=DEFAULT_HORIZON),
    )


_PRESETS = {
    "fig1_discontinuous_chatter": lambda: _fig12(Controller.DISCONTINUOUS),
    "fig2_hybrid": lambda: _fig12(Controller.HYBRID),
    "fig3_compare": _fig3,
    "fig4_delta_sweep": lambda: replace(_fig3(), deltas=SWEEP_DELTAS),
    "fig5_unwinding": lambda: Scenario(
        controller=Controller.HYBRID,
        k=5.0,
        delta=UNWINDING_DELTAS[0],
        deltas=UNWINDING_DELTAS,
        q_initial=near_antipode(-0.9),
        h_initial=1,
        integration=IntegrationSettings(t_final=DEFAULT_HORIZON),
    ),
    "regulation_noisy": lambda: Scenario(
        controller=Controller.HYBRID,
        k=0.020,
        delta=0.1,
        noise=NoiseModel.from_variance(0.09),
        q_initial=_dq(REGULATION_Q0),
        q_desired=_dq(REGULATION_QD),
        integration=IntegrationSettings(t_final=DEFAULT_HORIZON),
    ),
}

PRESETS = tuple(_PRESETS)


def preset(name: str) -> Scenario:
    try:
        factory = _PRESETS[name]
    except KeyError:
        raise UnknownPreset(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}") from None
    return replace(factory(), label=name)
