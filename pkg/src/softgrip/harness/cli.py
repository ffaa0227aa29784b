"""Command-line entry points: train, eval, record, replay, serve, fig3."""

from __future__ import annotations

import argparse
import dataclasses
import glob
import json
import os
import sys

import torch

from ..config import TrainConfig, load_train_config, preset_env, save_train_config
from ..demos import DemoTrajectory, record_demo, replay_demo
from ..env import GripperEnv
from ..learner import SacAgent
from .scripted import PickDriver, PushDriver


def _load_config(args) -> TrainConfig:
    if getattr(args, "config", None):
        return load_train_config(args.config)
    cfg = TrainConfig(env=preset_env(args.preset))
    if getattr(args, "steps", None):
        cfg = dataclasses.replace(cfg, run=dataclasses.replace(cfg.run,
                                                               total_steps=args.steps))
    return cfg.validate()


def _add_config_args(p, default_preset="lite-pick"):
    p.add_argument("--config", help="path to a TrainConfig JSON file")
    p.add_argument("--preset", default=default_preset,
                   help="config preset when --config is not given")


def cmd_train(args):
    from .train import MethodSpec, train

    torch.set_num_threads(args.torch_threads)
    config = _load_config(args)
    method = MethodSpec.parse(args.method)
    demo_paths = sorted(glob.glob(os.path.join(args.demos, "*.jsonl"))) if args.demos else []
    manifest = train(config, method, args.seed, args.out, demo_paths=demo_paths)
    print(json.dumps(manifest, indent=2, sort_keys=True))


def cmd_eval(args):
    from .evaluate import evaluate

    torch.set_num_threads(args.torch_threads)
    config = _load_config(args)
    env_cfg = config.env
    if args.task and args.task != env_cfg.task.kind:
        raise SystemExit(f"checkpoint config is for task {env_cfg.task.kind!r}; "
                         f"pass a matching --task or omit it")
    agent = SacAgent(config.learner, env_cfg.control.workspace_lo,
                     env_cfg.control.workspace_hi, seed=0)
    agent.load(args.ckpt)
    seeds = [int(s) for s in args.seeds.split(",")]
    report = evaluate(env_cfg, agent, seeds, args.episodes, out_dir=args.out)
    print(json.dumps({k: report[k] for k in ("success_rate", "stress")},
                     indent=2, sort_keys=True))


def cmd_record(args):
    config = _load_config(args)
    env = GripperEnv(config.env)
    os.makedirs(args.out, exist_ok=True)
    drivers = {"pick": PickDriver, "push": PushDriver}
    kind = config.env.task.kind
    recorded = 0
    seed = args.start_seed
    attempts = 0
    while recorded < args.count and attempts < args.count * 10:
        driver = drivers[kind](env)
        demo, reason = record_demo(env, lambda obs: driver(obs), seed=seed)
        attempts += 1
        seed += 1
        if demo is None:
            print(f"seed {seed - 1}: {reason}", file=sys.stderr)
            continue
        path = os.path.join(args.out, f"demo_{recorded:03d}.jsonl")
        demo.save(path)
        recorded += 1
        print(f"[{recorded}/{args.count}] saved {path} "
              f"({demo.header['steps']} steps)")
    if recorded < args.count:
        raise SystemExit(f"only {recorded}/{args.count} demos recorded")


def cmd_replay(args):
    config = _load_config(args)
    env = GripperEnv(config.env)
    demo = DemoTrajectory.load_file(args.demo)
    observations, rewards, dones = replay_demo(env, demo)
    print(json.dumps({
        "demo_id": demo.header["demo_id"],
        "steps": len(rewards),
        "return": sum(rewards),
        "verified": True,
    }, indent=2))


def cmd_serve(args):
    from .server import serve

    config = _load_config(args)
    serve(config, host=args.host, port=args.port, demo_dir=args.demo_dir)


def cmd_fig3(args):
    from .fig3 import fig3_scenario

    report = fig3_scenario(seed=args.seed)
    print(json.dumps(report, indent=2, sort_keys=True))
    if args.out:
        with open(args.out, "w") as f:
            json.dump(report, f, indent=2, sort_keys=True)


def cmd_make_config(args):
    config = TrainConfig(env=preset_env(args.preset))
    save_train_config(config, args.out)
    print(f"wrote {args.out}")


def main(argv=None):
    parser = argparse.ArgumentParser(prog="softgrip",
                                     description="stress-aware manipulation lab")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train one method/seed cell")
    _add_config_args(p)
    p.add_argument("--method", required=True,
                   help="flag bundle: e.g. C,SPR,D or SPR,D or naive or bc")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--steps", type=int, help="override the step budget")
    p.add_argument("--out", required=True)
    p.add_argument("--demos", help="directory of demo .jsonl files")
    p.add_argument("--torch-threads", type=int, default=1)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint")
    _add_config_args(p)
    p.add_argument("--ckpt", required=True)
    p.add_argument("--task", choices=["pick", "push"])
    p.add_argument("--episodes", type=int, default=40)
    p.add_argument("--seeds", default="0,1,2")
    p.add_argument("--out")
    p.add_argument("--torch-threads", type=int, default=1)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("record", help="record demos with the scripted driver")
    _add_config_args(p)
    p.add_argument("--count", type=int, default=20)
    p.add_argument("--start-seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_record)

    p = sub.add_parser("replay", help="deterministically replay and verify a demo")
    p.add_argument("demo")
    _add_config_args(p)
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("serve", help="websocket bridge for the teleop UI")
    _add_config_args(p)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8765)
    p.add_argument("--demo-dir", default="demos_ui")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("fig3", help="grasp-vs-pinch stress contrast scenario")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--out")
    p.set_defaults(func=cmd_fig3)

    p = sub.add_parser("make-config", help="write a preset TrainConfig JSON")
    p.add_argument("--preset", default="lite-pick")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_make_config)

    args = parser.parse_args(argv)
    args.func(args)


if __name__ == "__main__":
    main()
