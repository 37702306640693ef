"""Generalized advantage estimation for the finite-horizon task.

The defining modification: value targets are NOT bootstrapped past episode
ends. Both fall terminations and horizon timeouts contribute a terminal
value of zero; the critic's estimate only bootstraps across non-terminal
rollout cuts (an episode usually spans several rollouts).
"""

import numpy as np


def compute_gae_finite_horizon(rewards, values, last_values, dones, gamma, lam):
    """GAE over a (T, N) rollout; returns (advantages, returns), float64.

    delta_t = r_t + gamma * V(s_{t+1}) * (1 - done_t) - V(s_t), with
    V(s_{T}) = last_values at the rollout cut. Advantages are raw; callers
    normalize before the policy update.
    """
    rewards = np.asarray(rewards, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    last_values = np.asarray(last_values, dtype=np.float64)
    not_done = 1.0 - np.asarray(dones, dtype=np.float64)

    steps = rewards.shape[0]
    advantages = np.zeros_like(rewards)
    gae = np.zeros_like(rewards[0])
    for t in reversed(range(steps)):
        next_value = values[t + 1] if t + 1 < steps else last_values
        delta = rewards[t] + gamma * next_value * not_done[t] - values[t]
        gae = delta + gamma * lam * not_done[t] * gae
        advantages[t] = gae
    return advantages, advantages + values


def normalize_advantages(advantages, eps=1e-8):
    """Zero-mean unit-variance advantages over the whole batch."""
    adv = np.asarray(advantages, dtype=np.float64)
    return (adv - adv.mean()) / (adv.std() + eps)
