from .model import (
    ActuatorCommand,
    ContactPoint,
    NumericalDivergence,
    RobotModel,
    RobotState,
    Q_LEGS,
    Q_PITCH,
    Q_WHEELS,
    Q_X,
    Q_Z,
)
from .engine import PlanarEngine, apply_push, pd_torque, resolve_contacts, step_physics

__all__ = [
    "ActuatorCommand",
    "ContactPoint",
    "NumericalDivergence",
    "PlanarEngine",
    "RobotModel",
    "RobotState",
    "Q_LEGS",
    "Q_PITCH",
    "Q_WHEELS",
    "Q_X",
    "Q_Z",
    "apply_push",
    "pd_torque",
    "resolve_contacts",
    "step_physics",
]
