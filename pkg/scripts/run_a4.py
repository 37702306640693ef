#!/usr/bin/env python3
"""Full-terrain curriculum training (the long acceptance run).

Trains 5000 iterations on the six-column terrain grid and freezes the
checkpoint plus summary under artifacts/a4_<variant>/. Variants:
full (default), no_priv (critic sees the observation only), no_bool
(terrain boolean forced to zero during training). Expect hours per run.
"""

import argparse
import json
import os
import sys
import time

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

import numpy as np

from stepup.config import load_config
from stepup.ppo import PpoTrainer
from stepup.ppo.trainer import TrainStats

SEED = 42


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--variant", choices=["full", "no_priv", "no_bool"],
                        default="full")
    parser.add_argument("--iterations", type=int, default=5000)
    parser.add_argument("--seed", type=int, default=SEED)
    args = parser.parse_args()

    root = os.path.join(os.path.dirname(__file__), "..")
    out_dir = os.path.join(root, "artifacts", f"a4_{args.variant}")
    os.makedirs(out_dir, exist_ok=True)
    cfg = load_config()

    trainer = PpoTrainer(
        cfg, seed=args.seed,
        critic_privileged=(args.variant != "no_priv"),
        bool_override=(0.0 if args.variant == "no_bool" else None))
    stairs_cols = np.flatnonzero([c == "stairs_family"
                                  for c in trainer.env.grid.columns])
    t0 = time.time()
    ckpt = os.path.join(out_dir, "checkpoint.bin")
    with open(os.path.join(out_dir, "stats.tsv"), "w") as log:
        log.write("\t".join(TrainStats.header(len(trainer.env.grid.columns))) + "\n")
        for _ in range(args.iterations):
            stats = trainer.train_iteration()
            log.write("\t".join(str(v) for v in stats.row()) + "\n")
            if stats.iteration % 25 == 0:
                log.flush()
                stairs_mean = float(np.mean([stats.column_levels[c]
                                             for c in stairs_cols]))
                print(f"it {stats.iteration:5d} rew {stats.episode_reward:7.1f} "
                      f"len {stats.episode_length:5.1f} succ {stats.success_fraction:4.2f} "
                      f"stairs-row {stairs_mean:4.2f} [{time.time()-t0:7.0f}s]",
                      flush=True)
            if stats.iteration % 500 == 0:
                trainer.save_checkpoint(ckpt)

    trainer.save_checkpoint(ckpt)
    rows = trainer.env.grid.env_row
    cols = trainer.env.grid.env_col
    stairs_mask = np.isin(cols, stairs_cols)
    result = dict(
        variant=args.variant,
        iterations=trainer.iteration,
        seed=args.seed,
        mean_stairs_level=float(rows[stairs_mask].mean()),
        mean_level_per_column=[float(rows[cols == c].mean())
                               for c in range(len(trainer.env.grid.columns))],
        wall_seconds=round(time.time() - t0, 1),
    )
    with open(os.path.join(out_dir, "result.json"), "w") as fh:
        json.dump(result, fh, indent=2)
    print("A4 run complete:", result, flush=True)


if __name__ == "__main__":
    main()
