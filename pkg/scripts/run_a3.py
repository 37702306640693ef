#!/usr/bin/env python3
"""Flat-terrain training smoke: train at N=1024 until evaluation clears 90%
goal-reach success over 500 trials (checked every 25 iterations, up to the
1500-iteration cap), then freeze the checkpoint under artifacts/.
"""

import json
import os
import sys
import time

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from stepup.config import load_config
from stepup.harness import EvalSpec, evaluate
from stepup.ppo import PpoTrainer
from stepup.terrain import TerrainKind

SEED = 42
BAR = 90.0
TRIALS = 500
CHECK_EVERY = 25
FIRST_CHECK = 75
MAX_ITERATIONS = 1500

def main():
    root = os.path.join(os.path.dirname(__file__), "..")
    out_dir = os.path.join(root, "artifacts", "a3")
    os.makedirs(out_dir, exist_ok=True)
    ckpt = os.path.join(out_dir, "checkpoint.bin")
    cfg = load_config(os.path.join(root, "configs", "flat.yaml"))

    trainer = PpoTrainer(cfg, seed=SEED)
    t0 = time.time()
    result = None
    with open(os.path.join(out_dir, "stats.tsv"), "w") as log:
        from stepup.ppo.trainer import TrainStats
        log.write("\t".join(TrainStats.header(6)) + "\n")
        while trainer.iteration < MAX_ITERATIONS:
            stats = trainer.train_iteration()
            log.write("\t".join(str(v) for v in stats.row()) + "\n")
            log.flush()
            if stats.iteration % 10 == 0:
                print(f"it {stats.iteration:4d} rew {stats.episode_reward:7.1f} "
                      f"len {stats.episode_length:5.1f} succ {stats.success_fraction:4.2f} "
                      f"[{time.time()-t0:6.1f}s]", flush=True)
            due = (stats.iteration >= FIRST_CHECK
                   and stats.iteration % CHECK_EVERY == 0)
            if due and stats.success_fraction >= 0.85:
                trainer.save_checkpoint(ckpt)
                rep = evaluate(EvalSpec(checkpoint=ckpt, kind=TerrainKind.SMOOTH_SLOPE,
                                        level=0, trials=TRIALS, mode="off", seed=7),
                               cfg)
                print(f"  eval @ it {stats.iteration}: {rep.summary()}", flush=True)
                if rep.success_rate >= BAR:
                    result = dict(iteration=stats.iteration,
                                  success_rate=rep.success_rate,
                                  fall_rate=rep.fall_rate,
                                  mean_final_distance=rep.mean_final_distance,
                                  trials=TRIALS, seed=SEED,
                                  wall_seconds=round(time.time() - t0, 1))
                    break
    trainer.save_checkpoint(ckpt)
    if result is None:
        rep = evaluate(EvalSpec(checkpoint=ckpt, kind=TerrainKind.SMOOTH_SLOPE,
                                level=0, trials=TRIALS, mode="off", seed=7), cfg)
        result = dict(iteration=trainer.iteration, success_rate=rep.success_rate,
                      fall_rate=rep.fall_rate,
                      mean_final_distance=rep.mean_final_distance,
                      trials=TRIALS, seed=SEED,
                      wall_seconds=round(time.time() - t0, 1))
    with open(os.path.join(out_dir, "result.json"), "w") as fh:
        json.dump(result, fh, indent=2)
    print("A3 result:", result, flush=True)

if __name__ == "__main__":
    main()
