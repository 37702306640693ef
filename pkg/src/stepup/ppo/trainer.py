"""Clipped-surrogate PPO with an asymmetric critic, on the vectorized env.

The actor consumes the noisy 23-entry observation; the critic consumes the
noise-free observation concatenated with the 26-entry privileged vector
(or the observation alone for the no-privileged-information ablation).
Gradients are computed by hand through the dense nets; one optimizer
learning rate is shared and adapted from the policy KL.
"""

import collections
import os
import time
from dataclasses import dataclass, field

import numpy as np

from ..env import CONTROL_DT, OBS_DIM, PRIV_DIM, VectorEnv
from ..net import Adam, DenseNet, GaussianPolicy, make_value_net, save_params
from .buffer import RolloutBuffer
from .gae import compute_gae_finite_horizon, normalize_advantages

ACTION_DIM = 6


class NonFiniteLoss(RuntimeError):
    """A loss went non-finite; the iteration is rolled back."""


@dataclass
class TrainStats:
    iteration: int
    episode_reward: float
    episode_length: float
    success_fraction: float
    kl: float
    surrogate_loss: float
    value_loss: float
    entropy: float
    lr: float
    pos_bias_active: bool
    column_levels: list = field(default_factory=list)

    FIELDS = ("iteration", "episode_reward", "episode_length",
              "success_fraction", "kl", "surrogate_loss", "value_loss",
              "entropy", "lr", "pos_bias_active")

    def row(self):
        vals = [getattr(self, f) for f in self.FIELDS]
        return vals + list(self.column_levels)

    @classmethod
    def header(cls, num_columns):
        return list(cls.FIELDS) + [f"level_col{i}" for i in range(num_columns)]


def adapt_learning_rate(lr, kl, target, bounds):
    """Halve above 2x the KL target, grow 1.5x below half of it."""
    if target <= 0 or not np.isfinite(kl):
        return lr
    if kl > 2.0 * target:
        return max(bounds[0], lr * 0.5)
    if 0 <= kl < target / 2.0:
        return min(bounds[1], lr * 1.5)
    return lr


def _global_grad_clip(grads, max_norm):
    total = np.sqrt(sum(float((np.asarray(g, dtype=np.float64) ** 2).sum())
                        for g in grads))
    if total > max_norm:
        scale = max_norm / (total + 1e-12)
        grads = [g * scale for g in grads]
    return grads, total


class PpoTrainer:
    def __init__(self, config, seed, critic_privileged=True, bool_override=None,
                 env=None):
        self.cfg = config
        self.seed = int(seed)
        ss = np.random.SeedSequence(self.seed)
        env_seed, net_seed, sample_seed, shuffle_seed = ss.spawn(4)
        ppo = config.ppo

        self.env = env or VectorEnv(config, num_envs=ppo.num_envs,
                                    seed=env_seed.generate_state(1)[0])
        if bool_override is not None:
            self.env.bool_override = bool_override
        self.critic_privileged = critic_privileged
        critic_dim = OBS_DIM + PRIV_DIM if critic_privileged else OBS_DIM

        net_rng = np.random.default_rng(net_seed)
        self.policy = GaussianPolicy.create(
            OBS_DIM, ACTION_DIM, config.net.policy_hidden, net_rng,
            init_log_std=config.net.init_log_std)
        self.critic = make_value_net(critic_dim, config.net.value_hidden, net_rng)
        self.opt_policy = Adam(self.policy.parameters())
        self.opt_critic = Adam(self.critic.parameters())
        self.sample_rng = np.random.default_rng(sample_seed)
        self.shuffle_rng = np.random.default_rng(shuffle_seed)

        self.lr = ppo.learning_rate
        self.buffer = RolloutBuffer(ppo.num_envs, ppo.rollout_length,
                                    OBS_DIM, PRIV_DIM, ACTION_DIM)
        self.iteration = 0

        # r_pos_bias stays on until the running-mean per-episode position
        # reward clears half its theoretical maximum
        steps_in_window = self.env.terminal_window / CONTROL_DT
        self._pos_bias_threshold = 0.5 * (config.task.reward.position
                                          * 0.5 * steps_in_window)
        self._pos_bias_window = collections.deque(maxlen=ppo.pos_bias_window)

        n = ppo.num_envs
        self._ep_reward = np.zeros(n)
        self._ep_pos_reward = np.zeros(n)
        self._ep_steps = np.zeros(n, dtype=np.int64)
        self._finished = {"reward": [], "length": [], "pos": [], "success": []}

    # -- rollout ---------------------------------------------------------------

    def _critic_input(self, obs_clean, priv):
        if self.critic_privileged:
            return np.concatenate([obs_clean, priv], axis=-1)
        return obs_clean

    def collect_rollouts(self):
        """Fill the buffer with one rollout from all envs."""
        env, buf, ppo = self.env, self.buffer, self.cfg.ppo
        buf.restart()
        buf.log_std_old[:] = self.policy.log_std
        std = self.policy.std
        for k in ("reward", "length", "pos", "success"):
            self._finished[k].clear()

        for _ in range(ppo.rollout_length):
            obs = env.obs
            obs_clean = env.obs_clean
            priv = env.priv_obs
            mean = self.policy.mean(obs)
            noise = self.sample_rng.standard_normal(mean.shape)
            action = (mean + std * noise).astype(np.float32)
            log_prob = self.policy.log_prob_given_mean(mean, action)
            value = self.critic.forward(self._critic_input(obs_clean, priv))[:, 0]

            _, _, reward, done, info = env.step(action)
            self._ep_reward += reward
            self._ep_pos_reward += env.last_reward_terms["position"]
            self._ep_steps += 1
            if np.any(done):
                ids = np.flatnonzero(done)
                self._finished["reward"] += self._ep_reward[ids].tolist()
                self._finished["length"] += self._ep_steps[ids].tolist()
                self._finished["pos"] += self._ep_pos_reward[ids].tolist()
                success = ((info["final_distance"][ids]
                            <= self.cfg.task.success_radius)
                           & ~info["fall"][ids])
                self._finished["success"] += success.tolist()
                self._ep_reward[ids] = 0.0
                self._ep_pos_reward[ids] = 0.0
                self._ep_steps[ids] = 0

            buf.add(obs, obs_clean, priv, action, mean, log_prob, reward, value,
                    done, info["timeout"])

        buf.last_values[:] = self.critic.forward(
            self._critic_input(env.obs_clean, env.priv_obs))[:, 0]
        return buf

    # -- update ------------------------------------------------------------------

    def _snapshot(self):
        return ([p.copy() for p in self.policy.parameters()],
                [p.copy() for p in self.critic.parameters()],
                [m.copy() for m in self.opt_policy.m],
                [v.copy() for v in self.opt_policy.v], self.opt_policy.step_count,
                [m.copy() for m in self.opt_critic.m],
                [v.copy() for v in self.opt_critic.v], self.opt_critic.step_count)

    def _restore(self, snap):
        (pp, cp, pm, pv, pc, cm, cv, cc) = snap
        for dst, src in zip(self.policy.parameters(), pp):
            dst[...] = src
        for dst, src in zip(self.critic.parameters(), cp):
            dst[...] = src
        self.opt_policy.m = pm
        self.opt_policy.v = pv
        self.opt_policy.step_count = pc
        self.opt_critic.m = cm
        self.opt_critic.v = cv
        self.opt_critic.step_count = cc

    def ppo_update(self, buffer):
        """Clipped-surrogate epochs over minibatches; adaptive lr from KL.

        Returns aggregate loss/KL statistics. On a non-finite loss the
        pre-update parameters are restored and NonFiniteLoss is raised.
        """
        ppo = self.cfg.ppo
        snap = self._snapshot()

        advantages, returns = compute_gae_finite_horizon(
            buffer.rewards, buffer.values, buffer.last_values, buffer.dones,
            ppo.gamma, ppo.lam)
        advantages = normalize_advantages(advantages)

        obs = buffer.flat(buffer.obs)
        critic_in = buffer.flat(self._critic_input(buffer.obs_clean, buffer.priv))
        actions = buffer.flat(buffer.actions)
        old_means = buffer.flat(buffer.means)
        old_log_probs = buffer.flat(buffer.log_probs)
        adv = buffer.flat(advantages)
        rets = buffer.flat(returns)
        total = obs.shape[0]
        mb_size = total // ppo.minibatches

        log_std_old = buffer.log_std_old.astype(np.float64)
        ent_coef = ppo.entropy_coef
        stats = {"kl": [], "surrogate": [], "value": [], "entropy": []}

        try:
            for _ in range(ppo.epochs):
                order = self.shuffle_rng.permutation(total)
                for mb in range(ppo.minibatches):
                    idx = order[mb * mb_size:(mb + 1) * mb_size]
                    b_obs = obs[idx]
                    b_act = actions[idx].astype(np.float64)
                    b_adv = adv[idx]
                    b_old_lp = old_log_probs[idx]

                    mean, cache = self.policy.trunk.forward(b_obs, need_cache=True)
                    mean64 = mean.astype(np.float64)
                    std = self.policy.std
                    var = std ** 2
                    z = (b_act - mean64) / std
                    log_prob = (-0.5 * z * z - self.policy.log_std.astype(np.float64)
                                - 0.5 * np.log(2 * np.pi)).sum(axis=1)
                    ratio = np.exp(log_prob - b_old_lp)
                    surr1 = ratio * b_adv
                    surr2 = np.clip(ratio, 1 - ppo.clip_eps, 1 + ppo.clip_eps) * b_adv
                    surrogate = -np.minimum(surr1, surr2).mean()
                    entropy = self.policy.entropy()
                    if not np.isfinite(surrogate):
                        raise NonFiniteLoss(f"surrogate loss {surrogate}")

                    # d(-min)/dlogp flows only through the unclipped branch
                    unclipped = surr1 <= surr2
                    dlp = np.where(unclipped, -ratio * b_adv, 0.0) / len(idx)
                    dmean = (dlp[:, None] * (b_act - mean64) / var)
                    dlogstd = (dlp[:, None] * (z * z - 1.0)).sum(axis=0) - ent_coef
                    grads, _ = self.policy.trunk.backward(
                        cache, dmean.astype(np.float32))
                    grads = grads + [dlogstd.astype(np.float32)]
                    grads, _ = _global_grad_clip(grads, ppo.max_grad_norm)
                    self.opt_policy.step(grads, self.lr)

                    b_critic = critic_in[idx]
                    b_ret = rets[idx].astype(np.float32)
                    v, vcache = self.critic.forward(b_critic, need_cache=True)
                    v_err = v[:, 0] - b_ret
                    value_loss = ppo.value_loss_coef * float((v_err ** 2).mean())
                    if not np.isfinite(value_loss):
                        raise NonFiniteLoss(f"value loss {value_loss}")
                    dv = (2.0 * ppo.value_loss_coef * v_err / len(idx))[:, None]
                    vgrads, _ = self.critic.backward(vcache, dv.astype(np.float32))
                    vgrads, _ = _global_grad_clip(vgrads, ppo.max_grad_norm)
                    self.opt_critic.step(vgrads, self.lr)

                    # analytic KL(old || new) between the diagonal Gaussians,
                    # evaluated with this minibatch's pre-step forward pass
                    new_log_std = self.policy.log_std.astype(np.float64)
                    new_var = np.exp(2 * new_log_std)
                    kl = (new_log_std - log_std_old
                          + (np.exp(2 * log_std_old)
                             + (old_means[idx].astype(np.float64) - mean64) ** 2)
                          / (2 * new_var) - 0.5).sum(axis=1).mean()
                    self.lr = adapt_learning_rate(self.lr, kl, ppo.kl_target,
                                                  ppo.lr_bounds)

                    stats["kl"].append(float(kl))
                    stats["surrogate"].append(float(surrogate))
                    stats["value"].append(float(value_loss))
                    stats["entropy"].append(float(entropy))
        except NonFiniteLoss:
            self._restore(snap)
            raise
        return {k: float(np.mean(v)) for k, v in stats.items()}

    # -- outer loop ----------------------------------------------------------------

    def _update_pos_bias_gate(self):
        if not self.env.pos_bias_active:
            return
        if self._finished["pos"]:
            self._pos_bias_window.append(float(np.mean(self._finished["pos"])))
        if (len(self._pos_bias_window) > 0
                and np.mean(self._pos_bias_window) >= self._pos_bias_threshold):
            self.env.pos_bias_active = False

    def train_iteration(self):
        self.iteration += 1
        buf = self.collect_rollouts()
        self._update_pos_bias_gate()
        try:
            upd = self.ppo_update(buf)
        except NonFiniteLoss:
            upd = {"kl": float("nan"), "surrogate": float("nan"),
                   "value": float("nan"), "entropy": self.policy.entropy()}

        fin = self._finished
        levels = [float(np.mean(self.env.grid.env_row[self.env.grid.env_col == c]))
                  for c in range(len(self.env.grid.columns))]
        return TrainStats(
            iteration=self.iteration,
            episode_reward=float(np.mean(fin["reward"])) if fin["reward"] else 0.0,
            episode_length=float(np.mean(fin["length"])) if fin["length"] else 0.0,
            success_fraction=float(np.mean(fin["success"])) if fin["success"] else 0.0,
            kl=upd["kl"], surrogate_loss=upd["surrogate"],
            value_loss=upd["value"], entropy=upd["entropy"], lr=self.lr,
            pos_bias_active=self.env.pos_bias_active, column_levels=levels)

    def save_checkpoint(self, path, variant="full"):
        save_params({"policy": self.policy, "critic": self.critic}, path,
                    seed=self.seed, iteration=self.iteration)


def train(config, seed, out_dir, iterations=None, critic_privileged=True,
          bool_override=None, log_every=10, progress=None):
    """Run PPO training; writes checkpoints and a TSV stats log.

    Returns (final checkpoint path, list of TrainStats). `progress`, when
    given, is called with each TrainStats row (the CLI prints from it) and
    may return False to stop early.
    """
    os.makedirs(out_dir, exist_ok=True)
    trainer = PpoTrainer(config, seed, critic_privileged=critic_privileged,
                         bool_override=bool_override)
    total = iterations if iterations is not None else config.ppo.iterations
    stats_path = os.path.join(out_dir, "stats.tsv")
    rows = []
    with open(stats_path, "w") as log:
        log.write("\t".join(TrainStats.header(len(trainer.env.grid.columns))) + "\n")
        for _ in range(total):
            stats = trainer.train_iteration()
            rows.append(stats)
            log.write("\t".join(repr(v) if isinstance(v, float) else str(v)
                                for v in stats.row()) + "\n")
            log.flush()
            if trainer.iteration % config.ppo.checkpoint_every == 0:
                trainer.save_checkpoint(os.path.join(
                    out_dir, f"ckpt_{trainer.iteration:06d}.bin"))
            if progress is not None and progress(stats) is False:
                break
    final_path = os.path.join(out_dir, "ckpt_final.bin")
    trainer.save_checkpoint(final_path)
    return final_path, rows
