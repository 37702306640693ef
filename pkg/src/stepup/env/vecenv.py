"""Vectorized task environment: N independent robots, one shared model.

Each env runs the position-based finite-horizon task: spawn, drive to a
goal sampled on its curriculum terrain, collect the proximity reward during
the final two seconds. Episodes terminate on the 6 s horizon or on a fall.
Domain randomization (friction, pushes, observation noise, one-tick delay)
follows the training recipe; evaluation constructs the env with those
switches off.
"""

from dataclasses import dataclass

import numpy as np

from .. import terrain as tr
from ..sim import PlanarEngine, RobotModel, RobotState
from ..sim.model import Q_LEGS, QD_OBS
from . import rewards as rw
from .observations import NoiseModel, pack_observation, pack_privileged

CONTROL_DT = 0.02
AIR_TIME_THRESHOLD = 0.3   # s, touchdown bonus is (air time - this)


@dataclass
class EpisodeState:
    """Snapshot of one env's episode bookkeeping (for tests and teleop)."""

    t: float
    horizon: float
    terminal_window: float
    goal: np.ndarray
    goal_heading: float
    h_target: float
    terrain_bool: float
    row: int
    col: int
    mu: float
    next_push: float


class VectorEnv:
    """Batch of task environments stepped in lockstep at 50 Hz."""

    def __init__(self, config, num_envs, seed, noise=None, delay=None,
                 pushes=None, randomize_spawn=True, pool=None, grid=None):
        self.cfg = config
        self.num_envs = num_envs
        self.rng = np.random.default_rng(seed)
        task = config.task

        self.model = RobotModel.from_config(config.robot)
        self.engine = PlanarEngine(
            self.model, dt=config.sim.dt, gravity=config.sim.gravity,
            contact_stiffness=config.sim.contact_stiffness,
            contact_damping=config.sim.contact_damping)
        self.substeps = config.sim.substeps

        self.pool = pool or tr.TerrainPool(columns=config.terrain.columns,
                                           levels=config.terrain.levels, seed=seed)
        self.grid = grid or tr.CurriculumGrid(
            num_envs, columns=self.pool.columns,
            levels=self.pool.levels,
            start_level=min(config.terrain.initial_level, self.pool.levels - 1),
            promote_distance=task.success_radius,
            demote_distance=task.demote_distance,
            enabled=config.terrain.curriculum_enabled)
        self._pool_bucket = PlanarEngine.build_poly_bucket(self.pool.poly)

        self.horizon = task.episode_length
        self.terminal_window = task.terminal_window
        self.noise = NoiseModel.from_config(task.noise) if noise is None else noise
        self.delay_prob = task.delay_prob if delay is None else delay
        self.pushes_enabled = task.push.enabled if pushes is None else pushes
        self.randomize_spawn = randomize_spawn
        self.pos_bias_active = True
        self.bool_override = None   # eval modes force the terrain boolean

        self._equilibrium = self.engine.static_equilibrium()
        n = num_envs
        self.q = np.zeros((n, 9))
        self.qd = np.zeros((n, 9))
        self.prev_q = np.zeros((n, 9))
        self.prev_qd = np.zeros((n, 9))
        self.t_steps = np.zeros(n, dtype=np.int64)
        self.goal = np.zeros((n, 2))
        self.h_target = np.zeros(n)
        self.b = np.zeros(n)
        self.mu = np.zeros(n)
        self.cell = np.zeros(n, dtype=np.int64)
        self.poly = np.zeros((n,) + self.pool.poly.shape[1:])
        self.bucket_table = np.zeros((n, self._pool_bucket[2].shape[1]),
                                     dtype=np.int64)
        self.a_last = np.zeros((n, 6))
        self.qd_prev_ctrl = np.zeros((n, 9))
        self.force_ring = np.zeros((n, 5, 4))
        self.air_time = np.zeros((n, 2))
        self.next_push = np.zeros(n)

        self.reset_all()

    # -- episode lifecycle ---------------------------------------------------

    @property
    def t(self):
        return self.t_steps * CONTROL_DT

    def reset_all(self):
        self._reset_envs(np.arange(self.num_envs))
        self._refresh_observations()

    def _reset_envs(self, ids):
        if len(ids) == 0:
            return
        task = self.cfg.task
        rng = self.rng
        n = len(ids)
        cells = self.pool.cell(self.grid.env_col[ids], self.grid.env_row[ids])
        self.cell[ids] = cells
        self.poly[ids] = self.pool.poly[cells]
        self.bucket_table[ids] = self._pool_bucket[2][cells]
        on_stairs = self.pool.is_stairs_column[cells]

        lo, hi = task.spawn_before_step
        spawn_x = np.where(
            on_stairs,
            np.nan_to_num(self.pool.first_edge[cells]) - rng.uniform(lo, hi, n),
            self.pool.extent / 2.0)
        glo, ghi = task.goal_past_step
        goal_flat = spawn_x + rng.uniform(-task.goal_radius_flat,
                                          task.goal_radius_flat, n)
        goal_x = np.where(
            on_stairs,
            np.nan_to_num(self.pool.last_edge[cells]) + rng.uniform(glo, ghi, n),
            np.clip(goal_flat, 0.8, self.pool.extent - 0.8))

        jitter = task.height_command_jitter
        self.h_target[ids] = task.nominal_height + rng.uniform(-jitter, jitter, n)
        self.goal[ids, 0] = goal_x
        self.goal[ids, 1] = (self.pool.height_at(cells, goal_x)
                             + self.h_target[ids])
        self.b[ids] = np.where(on_stairs, 1.0, 0.0)
        flo, fhi = self.cfg.terrain.friction_range
        self.mu[ids] = rng.uniform(flo, fhi, n)

        q = np.tile(self._equilibrium, (n, 1))
        q[:, 0] = spawn_x
        q[:, 1] += self.pool.height_at(cells, spawn_x) + 0.003
        if self.randomize_spawn:
            q[:, 2] += rng.uniform(-task.spawn_pitch_jitter,
                                   task.spawn_pitch_jitter, n)
            q[:, Q_LEGS] += rng.uniform(-task.spawn_joint_jitter,
                                        task.spawn_joint_jitter, (n, 4))
        self.q[ids] = q
        self.qd[ids] = 0.0
        self.prev_q[ids] = q
        self.prev_qd[ids] = 0.0
        self.t_steps[ids] = 0
        self.a_last[ids] = 0.0
        self.qd_prev_ctrl[ids] = 0.0
        self.force_ring[ids] = 0.0
        self.air_time[ids] = 0.0
        self.next_push[ids] = rng.uniform(0.5, 3.5, n)

    # -- stepping --------------------------------------------------------------

    def _schedule_pushes(self):
        """Velocity pushes: U[0, 0.5] m/s along +-x, spaced >= 3 s apart."""
        due = self.pushes_enabled & (self.t >= self.next_push)
        if not np.any(due):
            return
        n = int(due.sum())
        speed = self.rng.uniform(0.0, 0.5, n)
        direction = np.where(self.rng.random(n) < 0.5, 1.0, -1.0)
        self.qd[due, 0] = speed * direction
        self.qd[due, 1] = 0.0
        self.next_push[due] = self.t[due] + self.rng.uniform(3.0, 6.0, n)

    def step(self, action):
        """Advance one control tick; auto-resets finished envs.

        Returns (obs, priv_obs, reward, done, info); observations are the
        post-reset ones for envs that finished this tick. info carries the
        pre-reset final distances plus timeout/fall masks.
        """
        task = self.cfg.task
        action = np.clip(np.asarray(action, dtype=np.float64),
                         -task.action_clip, task.action_clip)
        leg_targets = self.model.default_pose + task.action_scale_leg * action[:, :4]
        wheel_targets = task.action_scale_wheel * action[:, 4:]

        self.prev_q[:] = self.q
        self.prev_qd[:] = self.qd
        self.qd_prev_ctrl[:] = self.qd
        self._schedule_pushes()

        floor_fn = lambda x: self.pool.height_at(self.cell, x)
        bucket = (self._pool_bucket[0], self._pool_bucket[1], self.bucket_table)
        diverged = np.zeros(self.num_envs, dtype=bool)
        for _ in range(self.substeps):
            self.q, self.qd, info, div = self.engine.substep(
                self.q, self.qd, leg_targets, wheel_targets, self.poly,
                self.mu, floor_fn, bucket)
            diverged |= div
        self.t_steps += 1

        # trailing 5-tick force window [fnL, ftL, fnR, ftR]
        self.force_ring[:, :-1] = self.force_ring[:, 1:]
        self.force_ring[:, -1, 0] = info["normal_force"][:, 0]
        self.force_ring[:, -1, 1] = info["tangential_force"][:, 0]
        self.force_ring[:, -1, 2] = info["normal_force"][:, 1]
        self.force_ring[:, -1, 3] = info["tangential_force"][:, 1]

        contact = info["contact"]
        touchdown = contact & (self.air_time > 0)
        air_reward = ((self.air_time - AIR_TIME_THRESHOLD) * touchdown).sum(axis=1)
        self.air_time = np.where(contact, 0.0, self.air_time + CONTROL_DT)

        reward = self._compute_reward(action, info, air_reward)
        if np.any(diverged):
            reward = np.where(diverged, np.minimum(reward, -10.0), reward)

        pos = self.q[:, :2]
        distance = np.linalg.norm(pos - self.goal, axis=1)
        terrain_h = self.pool.height_at(self.cell, self.q[:, 0])
        fall = ((np.abs(self.q[:, 2]) > task.fall_pitch)
                | (self.q[:, 1] < terrain_h + task.fall_height_clearance)
                | diverged)
        timeout = self.t >= self.horizon - 1e-9
        done = fall | timeout

        self.a_last[:] = action
        info_out = {
            "final_distance": distance.copy(),
            "timeout": timeout & ~fall,
            "fall": fall,
        }

        done_ids = np.flatnonzero(done)
        if len(done_ids):
            self.grid.update_many(done_ids, distance[done_ids], self.rng)
            self._reset_envs(done_ids)
        self._refresh_observations()
        info_out["obs_clean"] = self.obs_clean
        return self.obs, self.priv_obs, reward.astype(np.float32), done, info_out

    def _compute_reward(self, action, contact_info, air_reward):
        task = self.cfg.task
        coeff = task.reward
        pos = self.q[:, :2]
        vel = self.qd[:, :2]
        t_now = self.t

        r_pos = rw.reward_position(pos, self.goal, t_now, self.horizon,
                                   self.terminal_window)
        r_bias = rw.reward_pos_bias(vel, pos, self.goal) if self.pos_bias_active else 0.0
        r_stall = rw.reward_stall(vel, pos, self.goal)
        r_face = rw.reward_face_goal(0.0, 0.0, pos, self.goal)

        shaping = rw.shaping_rewards(
            self.qd[:, QD_OBS], self.qd_prev_ctrl[:, QD_OBS],
            action, self.a_last, contact_info["torque"][:, QD_OBS],
            self.q[:, 2], CONTROL_DT)

        self.last_reward_terms = {
            "position": coeff.position * r_pos,
            "pos_bias": coeff.pos_bias * np.asarray(r_bias),
            "stall": coeff.stall * r_stall,
            "face_goal": coeff.face_goal * r_face,
            "joint_acc": coeff.joint_acc * shaping["joint_acc"],
            "action_rate": coeff.action_rate * shaping["action_rate"],
            "torque": coeff.torque * shaping["torque"],
            "orientation": coeff.orientation * shaping["orientation"],
            "air_time": coeff.air_time * air_reward,
        }
        return sum(self.last_reward_terms.values())

    # -- observations ----------------------------------------------------------

    def _effective_bool(self):
        if self.bool_override is None:
            return self.b
        return np.full(self.num_envs, float(self.bool_override))

    def _refresh_observations(self):
        n = self.num_envs
        delayed = self.rng.random(n) < self.delay_prob
        sel_q = np.where(delayed[:, None], self.prev_q, self.q)
        sel_qd = np.where(delayed[:, None], self.prev_qd, self.qd)
        noise = self.noise.draw(self.rng, n)
        b_eff = self._effective_bool()
        self.obs = pack_observation(sel_q, sel_qd, self.a_last, self.goal[:, 0],
                                    self.h_target, b_eff, noise)
        self.obs_clean = pack_observation(self.q, self.qd, self.a_last,
                                          self.goal[:, 0], self.h_target, b_eff)
        grid = self.pool.height_grid(self.cell, self.q[:, 0])
        self.priv_obs = pack_privileged(self.q, self.qd, self.goal, grid,
                                        self.force_ring.mean(axis=1), self.mu)

    def critic_input(self):
        """Noise-free observation concatenated with privileged information."""
        return np.concatenate([self.obs_clean, self.priv_obs], axis=1)


class Env:
    """Single-robot convenience wrapper over VectorEnv (index 0)."""

    def __init__(self, config, seed=0, **kwargs):
        self.vec = VectorEnv(config, num_envs=1, seed=seed, **kwargs)

    def reset(self):
        self.vec._reset_envs(np.array([0]))
        self.vec._refresh_observations()
        return self.robot_state(), self.episode_state()

    def robot_state(self) -> RobotState:
        return RobotState.from_q(self.vec.q[0], self.vec.qd[0])

    def episode_state(self) -> EpisodeState:
        v = self.vec
        return EpisodeState(
            t=float(v.t[0]), horizon=v.horizon,
            terminal_window=v.terminal_window, goal=v.goal[0].copy(),
            goal_heading=0.0, h_target=float(v.h_target[0]),
            terrain_bool=float(v._effective_bool()[0]),
            row=int(v.grid.env_row[0]), col=int(v.grid.env_col[0]),
            mu=float(v.mu[0]), next_push=float(v.next_push[0]))

    def observe(self):
        return self.vec.obs[0]

    def observe_privileged(self):
        return self.vec.priv_obs[0]

    def step_env(self, action):
        obs, priv, reward, done, info = self.vec.step(np.asarray(action)[None])
        scalar_info = {k: np.asarray(v)[0] for k, v in info.items()}
        return obs[0], priv[0], float(reward[0]), bool(done[0]), scalar_info
