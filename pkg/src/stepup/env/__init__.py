from .observations import (
    NoiseModel,
    OBS_DIM,
    PRIV_DIM,
    direction_to_goal,
    pack_observation,
    pack_privileged,
    projected_gravity,
)
from .rewards import (
    reward_face_goal,
    reward_pos_bias,
    reward_position,
    reward_stall,
    shaping_rewards,
)
from .vecenv import CONTROL_DT, Env, EpisodeState, VectorEnv

__all__ = [
    "CONTROL_DT",
    "Env",
    "EpisodeState",
    "NoiseModel",
    "OBS_DIM",
    "PRIV_DIM",
    "VectorEnv",
    "direction_to_goal",
    "pack_observation",
    "pack_privileged",
    "projected_gravity",
    "reward_face_goal",
    "reward_pos_bias",
    "reward_position",
    "reward_stall",
    "shaping_rewards",
]
