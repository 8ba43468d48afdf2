"""Dual quaternion algebra and hysteresis-based hybrid pose stabilization."""

from dqhc.algebra import (
    DualQuaternion,
    NonPureQuaternion,
    NonUnitRotation,
    NotOnManifold,
    Quaternion,
    Twist,
    UnitDualQuaternion,
    ZeroPrimaryPart,
    conj,
    cross,
    dot,
    dq_conj,
    dq_mul,
    hamilton_plus,
    hamilton_plus4,
    pose_from_rp,
    project_to_unit,
    quat_mul,
    rotation_of,
    translation_of,
    unvec8,
    vec8,
)
from dqhc.controllers import (
    Gains,
    HybridMemory,
    continuous_law,
    discontinuous_law,
    error_pose,
    hybrid_jump,
    hybrid_law,
)
from dqhc.kinematics import (
    IntegrationSettings,
    Method,
    closed_loop_rhs_oracle,
    kinematic_rhs,
    step,
)
from dqhc.hybrid_sim import (
    NoiseModel,
    NonFiniteState,
    RunResult,
    RunSummary,
    lyapunov,
    run,
    run_batch,
    sweep_delta,
    unwinding_probe,
)
from dqhc.scenarios import (
    ConfigError,
    Controller,
    Scenario,
    UnknownPreset,
    preset,
    PRESETS,
)

__version__ = "0.1.0"
