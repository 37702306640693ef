from .buffer import RolloutBuffer
from .gae import compute_gae_finite_horizon, normalize_advantages
from .trainer import NonFiniteLoss, PpoTrainer, TrainStats, train

__all__ = [
    "NonFiniteLoss",
    "PpoTrainer",
    "RolloutBuffer",
    "TrainStats",
    "compute_gae_finite_horizon",
    "normalize_advantages",
    "train",
]
