"""Command-line entry points: train, eval, ablate, profile, play."""

import argparse
import os
import sys

import numpy as np

from .config import ConfigError, load_config
from .terrain import TerrainKind


def _parse_terrain(text):
    """'kind:level' or 'step:<height m>' -> EvalSpec fields."""
    name, _, value = text.partition(":")
    if name == "step" and "." in value:
        return {"step_height": float(value)}
    kind = TerrainKind(name) if name != "stairs_family" else None
    level = int(value or 0)
    if kind is None:
        kind = TerrainKind.STEP if level <= 5 else TerrainKind.STAIRS
    return {"kind": kind, "level": level}


def cmd_train(args):
    from .ppo import train

    cfg = load_config(args.config)
    variant = args.variant
    out = args.out or os.path.join("runs", f"{variant}_seed{args.seed}")

    def progress(stats):
        if stats.iteration % args.log_every == 0 or stats.iteration == 1:
            print(f"iter {stats.iteration:5d}  reward {stats.episode_reward:8.1f}  "
                  f"len {stats.episode_length:5.1f}  success {stats.success_fraction:5.2f}  "
                  f"kl {stats.kl:7.4f}  lr {stats.lr:.1e}", flush=True)
        return True

    path, rows = train(
        cfg, seed=args.seed, out_dir=out, iterations=args.iterations,
        critic_privileged=(variant != "no_priv"),
        bool_override=(0.0 if variant == "no_bool" else None),
        progress=progress)
    print(f"final checkpoint: {path}")
    print(f"stats log: {os.path.join(out, 'stats.tsv')}")
    return 0


def cmd_eval(args):
    from .harness import EvalSpec, evaluate

    cfg = load_config(args.config)
    spec = EvalSpec(checkpoint=args.checkpoint, trials=args.trials,
                    mode=args.mode, seed=args.seed,
                    success_radius=args.radius, **_parse_terrain(args.terrain))
    report = evaluate(spec, cfg)
    print(report.summary())
    return 0


def cmd_ablate(args):
    from .harness import ablation_matrix, format_ablation_table

    cfg = load_config(args.config)
    checkpoints = {"full": args.full, "no_bool": args.no_bool,
                   "no_priv": args.no_priv}
    heights = [float(h) for h in args.heights.split(",")]
    table = ablation_matrix(checkpoints, heights, trials=args.trials,
                            seed=args.seed, config=cfg)
    text = format_ablation_table(table)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
        print(f"wrote {args.out}")
    print(text, end="")
    return 0


def cmd_profile(args):
    from .harness import analyze_profile, record_velocity_profile

    cfg = load_config(args.config)
    trace = record_velocity_profile(args.checkpoint, args.step, args.out,
                                    seed=args.seed, config=cfg)
    print(f"wrote {args.out} ({len(trace)} ticks)")
    metrics = analyze_profile(trace)
    if metrics:
        print(f"peak approach velocity {metrics['peak_before']:.2f} m/s, "
              f"minimum near the step {metrics['min_near_step']:.2f} m/s "
              f"({'decelerates' if metrics['decelerated'] else 'no deceleration'} "
              f"for the step-up)")
    return 0


def cmd_play(args):
    from .teleop import teleop_service

    cfg = load_config(args.config)
    print(f"serving teleop on ws://{args.host}:{args.port} (ctrl-c to stop)")
    return teleop_service(args.checkpoint, args.port, cfg, host=args.host)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="stepup",
        description="Planar wheeled-biped step climbing: training, evaluation, teleop.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="run PPO training")
    p.add_argument("--config", default=None, help="YAML overrides")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--iterations", type=int, default=None)
    p.add_argument("--out", default=None, help="output directory")
    p.add_argument("--variant", choices=["full", "no_bool", "no_priv"],
                   default="full")
    p.add_argument("--log-every", type=int, default=10)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--terrain", default="step:0.10",
                   help="kind:level or step:<height m>")
    p.add_argument("--trials", type=int, default=2000)
    p.add_argument("--mode", choices=["on", "off"], default=None,
                   help="force the terrain boolean")
    p.add_argument("--radius", type=float, default=0.20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("ablate", help="success-rate grid over step heights")
    p.add_argument("--full", default=None, help="full-method checkpoint")
    p.add_argument("--no-bool", dest="no_bool", default=None)
    p.add_argument("--no-priv", dest="no_priv", default=None)
    p.add_argument("--heights", default="0.05,0.10,0.15,0.20")
    p.add_argument("--trials", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("profile", help="record a step-up velocity profile")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--step", type=float, default=0.10, help="step height (m)")
    p.add_argument("--out", default="velocity_profile.tsv")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("play", help="teleop websocket service")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--port", type=int, default=8765)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_play)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except Exception as err:   # surfaced with a diagnostic, nonzero exit
        print(f"error: {type(err).__name__}: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
