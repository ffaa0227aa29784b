"""The full training loop: rollouts, buffers, updates, curriculum, metrics.

One process trains one (method, seed) cell of the ablation grid. Methods are
flag bundles: C (rigid-first curriculum), SPR (stress-penalized reward), D
(offline demonstrations, RLPD-style 50/50 batches), or the BC baseline that
never touches the environment during optimization.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import os
import time

import numpy as np

from ..config import TrainConfig, save_train_config
from ..curriculum import CurriculumState, SOFT_PHASE
from ..demos import load_demos_into_buffer
from ..env import GripperEnv, RIGID, SOFT
from ..errors import ConfigurationError
from ..learner import OFFLINE, ReplayBuffer, SacAgent, rlpd_batch


@dataclasses.dataclass(frozen=True)
class MethodSpec:
    """Ablation-grid cell: which mechanisms are active."""

    curriculum: bool = False
    stress_reward: bool = False
    demos: bool = False
    bc: bool = False

    @classmethod
    def parse(cls, text):
        text = text.strip().lower()
        if text == "naive":
            return cls()
        if text == "bc":
            return cls(bc=True, demos=True)
        flags = {f.strip() for f in text.split(",") if f.strip()}
        unknown = flags - {"c", "spr", "d"}
        if unknown:
            raise ConfigurationError(
                f"unknown method flags {sorted(unknown)}; use C,SPR,D | naive | bc")
        return cls(curriculum="c" in flags, stress_reward="spr" in flags,
                   demos="d" in flags)

    @property
    def name(self):
        if self.bc:
            return "bc"
        flags = [n for n, on in (("C", self.curriculum), ("SPR", self.stress_reward),
                                 ("D", self.demos)) if on]
        return ",".join(flags) if flags else "naive"


class MetricsWriter:
    def __init__(self, path, fields):
        self._file = open(path, "w", newline="")
        self._writer = csv.DictWriter(self._file, fieldnames=fields)
        self._writer.writeheader()

    def write(self, **row):
        self._writer.writerow(row)
        self._file.flush()

    def close(self):
        self._file.close()


EPISODE_FIELDS = ["episode", "global_step", "phase", "steps", "return", "success",
                  "failure", "switched", "peak_mean", "peak_top5_mean",
                  "peak_top10_median", "peak_max", "stress_reward_sum"]
UPDATE_FIELDS = ["update", "global_step", "critic", "actor", "temperature", "alpha",
                 "entropy", "online_size", "offline_size"]
BC_FIELDS = ["update", "bc", "offline_size"]


def train(config: TrainConfig, method: MethodSpec, seed, out_dir, demo_paths=()):
    """Run one training cell to its step budget; returns a summary dict."""
    config.validate()
    os.makedirs(out_dir, exist_ok=True)
    save_train_config(config, os.path.join(out_dir, "config.json"))

    env = GripperEnv(config.env)
    env.stress_reward_enabled = method.stress_reward
    agent = SacAgent(config.learner, config.env.control.workspace_lo,
                     config.env.control.workspace_hi, seed=seed)
    rng = np.random.default_rng(np.random.SeedSequence(entropy=(seed, 0xB0FF)))

    offline = ReplayBuffer(config.learner.buffer_capacity,
                           config.env.observation.num_points, provenance=OFFLINE)
    if method.demos:
        if not demo_paths:
            raise ConfigurationError(
                f"method {method.name} needs demonstrations; none were given")
        n_loaded = load_demos_into_buffer(demo_paths, env, offline)
    else:
        n_loaded = 0

    manifest = {
        "method": method.name,
        "flags": dataclasses.asdict(method),
        "seed": seed,
        "config_hash": env.config_hash,
        "total_steps": config.run.total_steps,
        "demo_transitions": n_loaded,
        "started_at": time.time(),
    }

    if method.bc:
        summary = _train_bc(config, agent, offline, out_dir, rng)
    else:
        summary = _train_rl(config, method, env, agent, offline, out_dir, rng, seed)
    manifest.update(summary)
    manifest["wall_seconds"] = time.time() - manifest["started_at"]
    with open(os.path.join(out_dir, "run.json"), "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
    return manifest


def _train_bc(config, agent, offline, out_dir, rng):
    metrics = MetricsWriter(os.path.join(out_dir, "updates.csv"), BC_FIELDS)
    total = config.run.total_steps
    last = None
    for update in range(total):
        batch = offline.sample(min(config.learner.batch_size, len(offline)), rng)
        last = agent.bc_update(batch)["bc"]
        if update % config.run.metrics_every == 0:
            metrics.write(update=update, bc=last, offline_size=len(offline))
    metrics.close()
    agent.save(os.path.join(out_dir, "ckpt.pt"))
    return {"updates": total, "final_bc_loss": last}


def _train_rl(config, method, env, agent, offline, out_dir, rng, seed):
    online = ReplayBuffer(config.learner.buffer_capacity,
                          config.env.observation.num_points)
    curriculum = CurriculumState(config=config.curriculum, enabled=method.curriculum)
    episodes = MetricsWriter(os.path.join(out_dir, "episodes.csv"), EPISODE_FIELDS)
    updates = MetricsWriter(os.path.join(out_dir, "updates.csv"), UPDATE_FIELDS)

    lcfg = config.learner
    total = config.run.total_steps
    global_step = 0
    episode = 0
    update_idx = 0
    recent = []

    while global_step < total:
        mode = SOFT if curriculum.phase == SOFT_PHASE else RIGID
        episode_seed = seed * 1_000_000 + episode
        obs = env.reset(seed=episode_seed, mode=mode)
        ep_return = 0.0
        ep_stress_reward = 0.0
        steps = 0
        done = False
        while not done and global_step < total:
            if global_step < lcfg.random_warmup:
                action = rng.uniform(-1.0, 1.0, 7)
            else:
                action, _ = agent.act(obs, stochastic=True)
            next_obs, reward, done, info = env.step(action)
            online.add(obs, np.asarray(action, dtype=np.float32), reward, next_obs,
                       info["terminal"])
            obs = next_obs
            ep_return += reward
            ep_stress_reward += info["reward_terms"]["stress"]
            steps += 1
            global_step += 1

            if global_step >= lcfg.learning_starts:
                for _ in range(lcfg.utd):
                    if method.demos:
                        batch = rlpd_batch(online, offline, lcfg.batch_size, rng)
                    elif len(online) >= lcfg.batch_size:
                        batch = online.sample(lcfg.batch_size, rng)
                    else:
                        batch = None
                    if batch is None:
                        continue
                    losses = agent.update(batch)
                    if update_idx % config.run.metrics_every == 0:
                        updates.write(update=update_idx, global_step=global_step,
                                      online_size=len(online),
                                      offline_size=len(offline), **losses)
                    update_idx += 1

            if global_step % config.run.checkpoint_every == 0:
                agent.save(os.path.join(out_dir, "ckpt.pt"))

        switched = curriculum.record_episode(env.episode_success)
        if switched:
            online.clear()  # rigid transitions misrepresent soft dynamics
        peak = env.tracker.snapshot()
        episodes.write(
            episode=episode, global_step=global_step, phase=mode, steps=steps,
            **{"return": round(ep_return, 6)},
            success=int(env.episode_success), failure=int(env.episode_failed),
            switched=int(switched), peak_mean=round(peak.mean, 3),
            peak_top5_mean=round(peak.top_k_mean, 3),
            peak_top10_median=round(peak.top_k_median, 3),
            peak_max=round(peak.max, 3),
            stress_reward_sum=round(ep_stress_reward, 6),
        )
        recent.append(env.episode_success)
        episode += 1

    episodes.close()
    updates.close()
    agent.save(os.path.join(out_dir, "ckpt.pt"))
    tail = recent[-30:] if recent else [False]
    return {
        "episodes": episode,
        "updates": update_idx,
        "train_success_rate_tail": float(np.mean(tail)),
        "curriculum_switched_at": curriculum.switched_at,
        "final_parameter_hash": agent.parameter_hash(),
    }
