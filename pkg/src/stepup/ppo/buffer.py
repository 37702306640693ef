"""Fixed-capacity rollout storage, fully overwritten every iteration."""

import numpy as np


class RolloutBuffer:
    def __init__(self, num_envs, rollout_length, obs_dim, priv_dim, act_dim):
        self.num_envs = num_envs
        self.rollout_length = rollout_length
        shape = (rollout_length, num_envs)
        self.obs = np.zeros(shape + (obs_dim,), dtype=np.float32)
        self.obs_clean = np.zeros(shape + (obs_dim,), dtype=np.float32)
        self.priv = np.zeros(shape + (priv_dim,), dtype=np.float32)
        self.actions = np.zeros(shape + (act_dim,), dtype=np.float32)
        self.means = np.zeros(shape + (act_dim,), dtype=np.float32)
        self.log_probs = np.zeros(shape, dtype=np.float64)
        self.rewards = np.zeros(shape, dtype=np.float32)
        self.values = np.zeros(shape, dtype=np.float32)
        self.dones = np.zeros(shape, dtype=bool)
        self.timeouts = np.zeros(shape, dtype=bool)
        self.last_values = np.zeros(num_envs, dtype=np.float32)
        self.log_std_old = np.zeros(act_dim, dtype=np.float32)
        self._cursor = 0

    def add(self, obs, obs_clean, priv, action, mean, log_prob, reward, value,
            done, timeout):
        t = self._cursor
        if t >= self.rollout_length:
            raise IndexError("rollout buffer full")
        self.obs[t] = obs
        self.obs_clean[t] = obs_clean
        self.priv[t] = priv
        self.actions[t] = action
        self.means[t] = mean
        self.log_probs[t] = log_prob
        self.rewards[t] = reward
        self.values[t] = value
        self.dones[t] = done
        self.timeouts[t] = timeout
        self._cursor += 1

    @property
    def full(self):
        return self._cursor == self.rollout_length

    def restart(self):
        self._cursor = 0

    def critic_inputs(self):
        return np.concatenate([self.obs_clean, self.priv], axis=-1)

    def flat(self, arr):
        """(T, N, ...) -> (T * N, ...)."""
        return arr.reshape((-1,) + arr.shape[2:])
