"""Task reward terms.

All functions broadcast over a leading batch axis and accept plain scalars,
so unit tests can drive them with synthetic inputs. Coefficients are applied
by the environment, not here.
"""

import numpy as np


def reward_position(pos, goal, t, horizon, terminal_window):
    """Goal-proximity reward, active only in the final terminal_window.

    0 for t <= horizon - terminal_window, else
    (1 / terminal_window) * 1 / (1 + ||pos - goal||^2).
    """
    if not terminal_window < horizon:
        raise ValueError("terminal window must be shorter than the horizon")
    pos = np.asarray(pos, dtype=float)
    goal = np.asarray(goal, dtype=float)
    d2 = ((pos - goal) ** 2).sum(axis=-1)
    gate = np.asarray(t, dtype=float) > horizon - terminal_window
    return np.where(gate, (1.0 / terminal_window) / (1.0 + d2), 0.0)


def reward_pos_bias(vel, pos, goal, eps=1e-6):
    """Cosine between the velocity and the goal direction; 0 if degenerate."""
    vel = np.asarray(vel, dtype=float)
    to_goal = np.asarray(goal, dtype=float) - np.asarray(pos, dtype=float)
    speed = np.linalg.norm(vel, axis=-1)
    dist = np.linalg.norm(to_goal, axis=-1)
    denom = speed * dist
    cos = (vel * to_goal).sum(axis=-1) / np.where(denom > 0, denom, 1.0)
    return np.where((speed < eps) | (dist < eps), 0.0, cos)


def reward_stall(vel, pos, goal, speed_limit=0.1, distance_gate=0.5):
    """-1 while slower than 0.1 m/s and still over 0.5 m from the goal."""
    speed = np.linalg.norm(np.asarray(vel, dtype=float), axis=-1)
    dist = np.linalg.norm(np.asarray(goal, dtype=float)
                          - np.asarray(pos, dtype=float), axis=-1)
    return np.where((speed < speed_limit) & (dist > distance_gate), -1.0, 0.0)


def reward_face_goal(heading, heading_goal, pos, goal, distance_gate=0.5):
    """-|heading error| while over 0.5 m away; inert for the planar robot.

    The planar reduction fixes heading == heading_goal == 0 at runtime, but
    the full formula stays implemented and unit-tested.
    """
    dist = np.linalg.norm(np.asarray(goal, dtype=float)
                          - np.asarray(pos, dtype=float), axis=-1)
    err = np.abs(np.asarray(heading, dtype=float)
                 - np.asarray(heading_goal, dtype=float))
    return np.where(dist > distance_gate, -err, 0.0)


def shaping_rewards(joint_vel, prev_joint_vel, action, prev_action, torque,
                    pitch, dt):
    """Smoothness penalties plus the wheel air-time hook, pre-coefficient.

    Returns a dict of raw terms; the environment multiplies by the config
    coefficients (air time is tracked statefully by the environment and not
    produced here).
    """
    joint_vel = np.asarray(joint_vel, dtype=float)
    prev_joint_vel = np.asarray(prev_joint_vel, dtype=float)
    action = np.asarray(action, dtype=float)
    prev_action = np.asarray(prev_action, dtype=float)
    torque = np.asarray(torque, dtype=float)
    return {
        "joint_acc": -(((joint_vel - prev_joint_vel) / dt) ** 2).sum(axis=-1),
        "action_rate": -((action - prev_action) ** 2).sum(axis=-1),
        "torque": -(torque ** 2).sum(axis=-1),
        "orientation": -np.asarray(pitch, dtype=float) ** 2,
    }
