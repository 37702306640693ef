"""Robot parameters and state containers for the planar wheeled biped.

Sagittal-plane convention: x forward, z up, pitch positive counterclockwise
(nose up). Generalized coordinates are ordered

    q = [x, z, pitch, hipL, kneeL, wheelL, hipR, kneeR, wheelR]

with leg joints position-controlled and wheels velocity-controlled. At zero
joint angles both legs point straight down; positive hip swings the leg
forward, the knee folds backward (negative angles only).
"""

from dataclasses import dataclass, field

import numpy as np

Q_X, Q_Z, Q_PITCH = 0, 1, 2
Q_LEGS = np.array([3, 4, 6, 7])     # hipL, kneeL, hipR, kneeR
Q_WHEELS = np.array([5, 8])
NQ = 9

# joint_vel observation order: 4 leg joints then 2 wheels
QD_OBS = np.array([3, 4, 6, 7, 5, 8])


class NumericalDivergence(RuntimeError):
    """A state entry became non-finite; the episode must terminate."""


@dataclass
class RobotModel:
    base_mass: float = 8.0
    base_inertia: float = 0.12
    base_com_offset: np.ndarray = field(default_factory=lambda: np.zeros(2))
    hip_offset: np.ndarray = field(default_factory=lambda: np.zeros(2))
    upper_mass: float = 0.7
    upper_length: float = 0.25
    upper_inertia: float = 0.0037
    lower_mass: float = 0.5
    lower_length: float = 0.25
    lower_inertia: float = 0.0026
    wheel_mass: float = 0.8
    wheel_radius: float = 0.10
    wheel_inertia: float = 0.010   # disc + reflected hub-motor rotor inertia
    joint_lower: np.ndarray = field(default_factory=lambda: np.array([-1.8, -2.6, -1.8, -2.6]))
    joint_upper: np.ndarray = field(default_factory=lambda: np.array([1.8, 0.0, 1.8, 0.0]))
    torque_limit_leg: float = 30.0
    torque_limit_wheel: float = 8.0
    kp: float = 80.0
    kd: float = 2.0
    kv: float = 2.0
    default_pose: np.ndarray = field(default_factory=lambda: np.array([0.6, -1.2, 0.6, -1.2]))

    def __post_init__(self):
        for name in ("base_com_offset", "hip_offset", "joint_lower", "joint_upper",
                     "default_pose"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=float))
        positives = dict(
            base_mass=self.base_mass, base_inertia=self.base_inertia,
            upper_mass=self.upper_mass, upper_length=self.upper_length,
            upper_inertia=self.upper_inertia, lower_mass=self.lower_mass,
            lower_length=self.lower_length, lower_inertia=self.lower_inertia,
            wheel_mass=self.wheel_mass, wheel_radius=self.wheel_radius,
            wheel_inertia=self.wheel_inertia, kp=self.kp, kd=self.kd, kv=self.kv,
            torque_limit_leg=self.torque_limit_leg,
            torque_limit_wheel=self.torque_limit_wheel,
        )
        for name, value in positives.items():
            if not value > 0:
                raise ValueError(f"{name} must be strictly positive, got {value}")
        if not np.all(self.joint_lower < self.joint_upper):
            raise ValueError("joint limits require lower < upper")

    @classmethod
    def from_config(cls, robot_cfg) -> "RobotModel":
        limits = robot_cfg.joint_limits
        return cls(
            base_mass=robot_cfg.base_mass,
            base_inertia=robot_cfg.base_inertia,
            base_com_offset=np.array(robot_cfg.base_com_offset),
            hip_offset=np.array(robot_cfg.hip_offset),
            upper_mass=robot_cfg.upper_leg.mass,
            upper_length=robot_cfg.upper_leg.length,
            upper_inertia=robot_cfg.upper_leg.inertia,
            lower_mass=robot_cfg.lower_leg.mass,
            lower_length=robot_cfg.lower_leg.length,
            lower_inertia=robot_cfg.lower_leg.inertia,
            wheel_mass=robot_cfg.wheel.mass,
            wheel_radius=robot_cfg.wheel.radius,
            wheel_inertia=robot_cfg.wheel.inertia,
            joint_lower=np.array([limits.hip[0], limits.knee[0], limits.hip[0], limits.knee[0]]),
            joint_upper=np.array([limits.hip[1], limits.knee[1], limits.hip[1], limits.knee[1]]),
            torque_limit_leg=robot_cfg.torque_limit_leg,
            torque_limit_wheel=robot_cfg.torque_limit_wheel,
            kp=robot_cfg.kp,
            kd=robot_cfg.kd,
            kv=robot_cfg.kv,
            default_pose=np.array(robot_cfg.default_pose),
        )

    @property
    def total_mass(self) -> float:
        return self.base_mass + 2 * (self.upper_mass + self.lower_mass + self.wheel_mass)

    def leg_drop(self, hip, knee):
        """Vertical distance from hip pin to wheel axle at pitch 0."""
        return (self.upper_length * np.cos(hip)
                + self.lower_length * np.cos(np.asarray(hip) + knee))

    def standing_height(self, pose=None) -> float:
        """Base height above flat ground for a symmetric pose."""
        pose = self.default_pose if pose is None else np.asarray(pose)
        return float(self.leg_drop(pose[0], pose[1]) + self.wheel_radius
                     - self.hip_offset[1])


@dataclass
class RobotState:
    """Planar base pose/velocity plus the actuated chain."""

    x: float = 0.0
    z: float = 0.0
    pitch: float = 0.0
    vx: float = 0.0
    vz: float = 0.0
    pitch_rate: float = 0.0
    joint_pos: np.ndarray = field(default_factory=lambda: np.zeros(4))
    joint_vel: np.ndarray = field(default_factory=lambda: np.zeros(6))   # 4 legs + 2 wheels
    wheel_angles: np.ndarray = field(default_factory=lambda: np.zeros(2))

    def __post_init__(self):
        self.joint_pos = np.asarray(self.joint_pos, dtype=float)
        self.joint_vel = np.asarray(self.joint_vel, dtype=float)
        self.wheel_angles = np.asarray(self.wheel_angles, dtype=float)

    def as_q(self) -> tuple[np.ndarray, np.ndarray]:
        q = np.zeros(NQ)
        qd = np.zeros(NQ)
        q[[Q_X, Q_Z, Q_PITCH]] = self.x, self.z, self.pitch
        q[Q_LEGS] = self.joint_pos
        q[Q_WHEELS] = self.wheel_angles
        qd[[Q_X, Q_Z, Q_PITCH]] = self.vx, self.vz, self.pitch_rate
        qd[QD_OBS] = self.joint_vel
        return q, qd

    @classmethod
    def from_q(cls, q: np.ndarray, qd: np.ndarray) -> "RobotState":
        return cls(
            x=float(q[Q_X]), z=float(q[Q_Z]), pitch=float(q[Q_PITCH]),
            vx=float(qd[Q_X]), vz=float(qd[Q_Z]), pitch_rate=float(qd[Q_PITCH]),
            joint_pos=q[Q_LEGS].copy(),
            joint_vel=qd[QD_OBS].copy(),
            wheel_angles=q[Q_WHEELS].copy(),
        )

    def is_finite(self) -> bool:
        q, qd = self.as_q()
        return bool(np.all(np.isfinite(q)) and np.all(np.isfinite(qd)))


@dataclass
class ActuatorCommand:
    """Leg position targets (rad) and wheel angular-velocity targets (rad/s)."""

    leg_targets: np.ndarray = field(default_factory=lambda: np.zeros(4))
    wheel_targets: np.ndarray = field(default_factory=lambda: np.zeros(2))

    def __post_init__(self):
        self.leg_targets = np.asarray(self.leg_targets, dtype=float)
        self.wheel_targets = np.asarray(self.wheel_targets, dtype=float)
        if not (np.all(np.isfinite(self.leg_targets))
                and np.all(np.isfinite(self.wheel_targets))):
            raise ValueError("actuator command must be finite")


@dataclass
class ContactPoint:
    wheel_index: int
    location: np.ndarray        # (2,) world
    normal_force: float         # N, >= 0
    tangential_force: float     # N, |f_t| <= mu * f_n
    penetration: float          # m
    normal: np.ndarray = field(default_factory=lambda: np.array([0.0, 1.0]))

    @property
    def force(self) -> np.ndarray:
        tangent = np.array([-self.normal[1], self.normal[0]])
        return self.normal_force * self.normal + self.tangential_force * tangent
