"""Observation packing for actor and critic.

Actor observation (23 entries, float32), packed in this order with the
scaling coefficient applied after noise:

    [0]      base pitch rate          * 0.25   (noisy)
    [1:3]    projected gravity        * 1.0    (noisy)
    [3]      direction to goal        * 1.0
    [4]      heading error            * 1.0    (identically 0, planar)
    [5]      height command           * 1.0
    [6]      terrain boolean          * 1.0
    [7:11]   leg joint positions      * 1.0    (noisy)
    [11:17]  joint velocities         * 0.05   (noisy; 4 legs + 2 wheels)
    [17:23]  last action              * 1.0

Privileged observation (26 entries, float32), noise- and delay-free:

    [0]      forward velocity         * 0.25
    [1]      base height              * 1.0
    [2:4]    goal position relative   * 1.0
    [4:21]   terrain height grid      * 5.0    (relative to base height)
    [21:25]  wheel contact forces     * 0.01   (5-tick sliding average,
                                                [fnL, ftL, fnR, ftR])
    [25]     friction coefficient     * 1.0
"""

import numpy as np

OBS_DIM = 23
PRIV_DIM = 26

IDX_PITCH_RATE = 0
IDX_GRAVITY = slice(1, 3)
IDX_DIR = 3
IDX_HEADING_ERR = 4
IDX_H_TARGET = 5
IDX_BOOL = 6
IDX_Q = slice(7, 11)
IDX_QD = slice(11, 17)
IDX_A_LAST = slice(17, 23)

OBS_SCALE = np.ones(OBS_DIM, dtype=np.float32)
OBS_SCALE[IDX_PITCH_RATE] = 0.25
OBS_SCALE[IDX_QD] = 0.05

PRIV_IDX_VX = 0
PRIV_IDX_H = 1
PRIV_IDX_GOAL = slice(2, 4)
PRIV_IDX_GRID = slice(4, 21)
PRIV_IDX_FORCES = slice(21, 25)
PRIV_IDX_MU = 25

PRIV_SCALE = np.ones(PRIV_DIM, dtype=np.float32)
PRIV_SCALE[PRIV_IDX_VX] = 0.25
PRIV_SCALE[PRIV_IDX_GRID] = 5.0
PRIV_SCALE[PRIV_IDX_FORCES] = 0.01


class NoiseModel:
    """Per-channel uniform observation noise, applied in raw units.

    Half-widths follow the convention of percentage x nominal scale with
    nominal scales of 1.0 (rad/s, unit vector, rad): pitch rate +-20%,
    gravity +-5%, joint positions +-1%, joint velocities +-150%. Command
    channels and the last action carry no noise, and the privileged
    observation never sees any.
    """

    def __init__(self, pitch_rate=0.20, gravity=0.05, joint_pos=0.01,
                 joint_vel=1.5, enabled=True):
        self.enabled = enabled
        self.half_width = np.zeros(OBS_DIM)
        self.half_width[IDX_PITCH_RATE] = pitch_rate
        self.half_width[IDX_GRAVITY] = gravity
        self.half_width[IDX_Q] = joint_pos
        self.half_width[IDX_QD] = joint_vel

    @classmethod
    def from_config(cls, noise_cfg):
        return cls(pitch_rate=noise_cfg.pitch_rate, gravity=noise_cfg.gravity,
                   joint_pos=noise_cfg.joint_pos, joint_vel=noise_cfg.joint_vel,
                   enabled=noise_cfg.enabled)

    def draw(self, rng, n):
        if not self.enabled:
            return np.zeros((n, OBS_DIM))
        return rng.uniform(-1.0, 1.0, size=(n, OBS_DIM)) * self.half_width


def direction_to_goal(delta_x, dead_band=0.1):
    """Saturated signed goal direction in [-1, 1]."""
    delta_x = np.asarray(delta_x, dtype=float)
    return np.clip(delta_x / np.maximum(np.abs(delta_x), dead_band), -1.0, 1.0)


def projected_gravity(pitch):
    """World down-vector expressed in the base frame."""
    pitch = np.asarray(pitch, dtype=float)
    return np.stack([-np.sin(pitch), -np.cos(pitch)], axis=-1)


def pack_observation(q, qd, a_last, goal_x, h_target, terrain_bool, noise=None):
    """Assemble the 23-entry actor observation from raw state arrays.

    q, qd are (N, 9) generalized coordinates (possibly the delayed tick);
    noise, when given, is a raw-unit (N, 23) additive array.
    """
    n = q.shape[0]
    raw = np.zeros((n, OBS_DIM))
    raw[:, IDX_PITCH_RATE] = qd[:, 2]
    raw[:, IDX_GRAVITY] = projected_gravity(q[:, 2])
    raw[:, IDX_DIR] = direction_to_goal(np.asarray(goal_x) - q[:, 0])
    raw[:, IDX_H_TARGET] = h_target
    raw[:, IDX_BOOL] = terrain_bool
    raw[:, IDX_Q] = q[:, [3, 4, 6, 7]]
    raw[:, IDX_QD] = qd[:, [3, 4, 6, 7, 5, 8]]
    raw[:, IDX_A_LAST] = a_last
    if noise is not None:
        raw += noise
    return (raw * OBS_SCALE).astype(np.float32)


def pack_privileged(q, qd, goal, height_grid, force_window_mean, mu):
    """Assemble the 26-entry privileged observation (exact quantities)."""
    n = q.shape[0]
    raw = np.zeros((n, PRIV_DIM))
    raw[:, PRIV_IDX_VX] = qd[:, 0]
    raw[:, PRIV_IDX_H] = q[:, 1]
    raw[:, PRIV_IDX_GOAL] = goal - q[:, :2]
    raw[:, PRIV_IDX_GRID] = height_grid - q[:, 1:2]
    raw[:, PRIV_IDX_FORCES] = force_window_mean
    raw[:, PRIV_IDX_MU] = mu
    return (raw * PRIV_SCALE).astype(np.float32)
