"""Evaluation, ablation tables, and the velocity-profile recorder.

Evaluation runs deterministic trials on a fixed terrain with policy mean
actions and all training-time randomization (noise, delay, pushes) off;
success means finishing within the success radius of the goal.
"""

import os
from dataclasses import dataclass, field

import numpy as np

from . import terrain as tr
from .config import Config, load_config
from .env import CONTROL_DT, VectorEnv
from .net import load_params
from .terrain import CurriculumGrid, TerrainKind, TerrainPool, single_step_field


class CheckpointError(RuntimeError):
    pass


class NoSuccessfulTrial(RuntimeError):
    pass


@dataclass
class EvalSpec:
    checkpoint: str
    kind: TerrainKind = TerrainKind.SMOOTH_SLOPE
    level: int = 0
    step_height: float = None          # overrides kind/level with one step
    trials: int = 2000
    mode: str = None                   # None | "on" | "off" (terrain boolean)
    success_radius: float = 0.20
    seed: int = 0

    def __post_init__(self):
        if self.trials <= 0:
            raise ValueError("trials must be positive")
        if self.success_radius <= 0:
            raise ValueError("success radius must be positive")
        if self.mode not in (None, "on", "off"):
            raise ValueError(f"mode must be on/off, got {self.mode!r}")

    def terrain_label(self):
        if self.step_height is not None:
            return f"step:{self.step_height:.2f}"
        return f"{self.kind.value}:{self.level}"


@dataclass
class EvalReport:
    success_rate: float                # percent
    mean_final_distance: float
    fall_rate: float                   # percent
    trials: int
    terrain: str
    mode: str
    seed: int
    config_echo: dict = field(default_factory=dict)
    velocity_trace: np.ndarray = None  # (ticks, 4): t, vx, x, z

    def summary(self):
        return (f"terrain={self.terrain} mode={self.mode or 'native'} "
                f"trials={self.trials} success={self.success_rate:.1f}% "
                f"falls={self.fall_rate:.1f}% "
                f"mean_dist={self.mean_final_distance:.3f}m")


def load_policy(path):
    """Load (policy, critic, header) from a checkpoint; CheckpointError on failure."""
    try:
        nets, header = load_params(path)
    except (OSError, ValueError) as err:
        raise CheckpointError(f"cannot load checkpoint {path!r}: {err}") from err
    if "policy" not in nets:
        raise CheckpointError(f"checkpoint {path!r} has no policy net")
    return nets["policy"], nets.get("critic"), header


def _eval_field(spec: EvalSpec):
    if spec.step_height is not None:
        return single_step_field(spec.step_height)
    if spec.kind is TerrainKind.STAIRS and spec.level < 6:
        raise tr.InvalidLevel("stair flights are defined for levels 6-11")
    seed = 1000 + spec.level
    if spec.kind in tr.STEP_FAMILY:
        return tr.stairs_family_terrain(spec.level, seed)
    return tr.generate_terrain(spec.kind, spec.level, seed)


def _eval_env(config, spec, num_envs, seed):
    field_ = _eval_field(spec)
    pool = TerrainPool.from_fields([[field_]])
    grid = CurriculumGrid(num_envs, columns=pool.columns, levels=1,
                          start_level=0, enabled=False)
    env = VectorEnv(config, num_envs=num_envs, seed=seed, pool=pool, grid=grid,
                    noise=None, delay=0.0, pushes=False, randomize_spawn=True)
    env.noise.enabled = False
    if spec.mode is not None:
        env.bool_override = 1.0 if spec.mode == "on" else 0.0
    return env


def evaluate(spec: EvalSpec, config: Config = None, record_trace=False) -> EvalReport:
    """Deterministic batched evaluation of one checkpoint on one terrain."""
    config = config or load_config()
    policy, _, _ = load_policy(spec.checkpoint)

    remaining = spec.trials
    distances, falls = [], []
    trace = None
    batch_index = 0
    while remaining > 0:
        batch = min(remaining, 1024)
        env = _eval_env(config, spec, batch,
                        seed=np.random.SeedSequence([spec.seed, batch_index])
                        .generate_state(1)[0])
        finished = np.zeros(batch, dtype=bool)
        fall_flag = np.zeros(batch, dtype=bool)
        final_dist = np.zeros(batch)
        rows = [] if (record_trace and batch_index == 0) else None
        max_ticks = int(round(env.horizon / CONTROL_DT))
        for _ in range(max_ticks):
            action = policy.mean(env.obs)
            if rows is not None and not finished[0]:
                rows.append((env.t[0], env.qd[0, 0], env.q[0, 0], env.q[0, 1]))
            _, _, _, done, info = env.step(action)
            newly = done & ~finished
            final_dist[newly] = info["final_distance"][newly]
            fall_flag[newly] = info["fall"][newly]
            finished |= done
            if finished.all():
                break
        distances.append(final_dist)
        falls.append(fall_flag)
        if rows is not None:
            trace = np.array(rows)
        remaining -= batch
        batch_index += 1

    distances = np.concatenate(distances)[:spec.trials]
    falls = np.concatenate(falls)[:spec.trials]
    # reaching the goal means arriving there, not falling onto it
    success = (distances <= spec.success_radius) & ~falls
    return EvalReport(
        success_rate=100.0 * float(success.mean()),
        mean_final_distance=float(distances.mean()),
        fall_rate=100.0 * float(falls.mean()),
        trials=spec.trials,
        terrain=spec.terrain_label(),
        mode=spec.mode,
        seed=spec.seed,
        config_echo={"success_radius": spec.success_radius},
        velocity_trace=trace,
    )


OTHER_TERRAIN_KINDS = (TerrainKind.SMOOTH_SLOPE, TerrainKind.DISCRETE_OBSTACLES,
                       TerrainKind.SMOOTH_PYRAMID, TerrainKind.ROUGH_PYRAMID)
OTHER_TERRAIN_LEVEL = 5


def ablation_matrix(checkpoints: dict, heights, trials=2000, seed=0,
                    config: Config = None) -> dict:
    """Success-rate grid: experiment rows x (step heights + other terrains).

    checkpoints maps {"full", "no_bool", "no_priv"} to paths (missing or
    None entries produce N/A cells). Step columns evaluate a single step of
    each height; the last column is the unweighted mean over the four
    non-stairs kinds at mid difficulty (level 5).
    """
    config = config or load_config()
    experiments = [
        ("Bool on", "full", "on"),
        ("Bool off", "full", "off"),
        ("No bool", "no_bool", "off"),
        ("No priv.", "no_priv", "on"),
    ]
    table = {"heights": list(heights), "rows": []}
    for label, key, mode in experiments:
        path = checkpoints.get(key)
        if not path:
            table["rows"].append({"experiment": label, "cells": ["N/A"] * (len(heights) + 1)})
            continue
        cells = []
        for h in heights:
            rep = evaluate(EvalSpec(checkpoint=path, step_height=h, trials=trials,
                                    mode=mode, seed=seed), config)
            cells.append(rep.success_rate)
        other = []
        for kind in OTHER_TERRAIN_KINDS:
            rep = evaluate(EvalSpec(checkpoint=path, kind=kind,
                                    level=OTHER_TERRAIN_LEVEL, trials=max(trials // 4, 1),
                                    mode=mode, seed=seed), config)
            other.append(rep.success_rate)
        cells.append(float(np.mean(other)))
        table["rows"].append({"experiment": label, "cells": cells})
    return table


def format_ablation_table(table) -> str:
    heights = table["heights"]
    header = (["experiment"] + [f"{h * 100:.0f}cm" for h in heights]
              + ["other terrains"])
    lines = [
        "# single-step success rates (%); 'other terrains' is the unweighted "
        "mean over the four non-stairs kinds at level 5",
        "\t".join(header),
    ]
    for row in table["rows"]:
        cells = [c if isinstance(c, str) else f"{c:.1f}" for c in row["cells"]]
        lines.append("\t".join([row["experiment"]] + cells))
    return "\n".join(lines) + "\n"


def analyze_profile(trace, edge_x=3.0, window=0.5):
    """Deceleration-before-step-up metric from a recorded velocity trace.

    Returns peak forward velocity before the step edge, the minimum within
    +-window seconds of first reaching it, and whether the robot slowed for
    the step-up (reported, not an acceptance bar).
    """
    t, vx, x = trace[:, 0], trace[:, 1], trace[:, 2]
    reach = np.flatnonzero(x >= edge_x - 0.15)
    if len(reach) == 0 or reach[0] == 0:
        return None
    t_contact = t[reach[0]]
    before = vx[x < edge_x - 0.15]
    near = vx[np.abs(t - t_contact) <= window]
    return {
        "peak_before": float(before.max()),
        "min_near_step": float(near.min()),
        "decelerated": bool(near.min() < before.max()),
    }


def record_velocity_profile(checkpoint, step_height, out_path, seed=0,
                            config: Config = None, max_attempts=100) -> np.ndarray:
    """Record (t, forward velocity, x, z) at 50 Hz for one successful trial."""
    config = config or load_config()
    for attempt in range(max_attempts):
        spec = EvalSpec(checkpoint=checkpoint, step_height=step_height, trials=1,
                        mode="on", seed=seed + attempt)
        report = evaluate(spec, config, record_trace=True)
        if report.success_rate > 0 and report.velocity_trace is not None:
            trace = report.velocity_trace
            os.makedirs(os.path.dirname(out_path) or ".", exist_ok=True)
            with open(out_path, "w") as fh:
                fh.write("t_s\tforward_velocity_mps\tbase_x_m\tbase_z_m\n")
                for row in trace:
                    fh.write("\t".join(f"{v:.5f}" for v in row) + "\n")
            return trace
    raise NoSuccessfulTrial(
        f"no successful trial on a {step_height:.2f} m step in {max_attempts} attempts")
