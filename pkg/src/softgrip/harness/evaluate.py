"""Deterministic policy evaluation and the ablation-table report format.

Success rate counts every episode; the episode-maximum stress statistics are
computed over successful episodes only, so a policy that fails by avoiding
contact cannot look artificially gentle.
"""

from __future__ import annotations

import json
import os

import numpy as np

from ..config import EnvConfig
from ..env import SOFT, EpisodeLogger, GripperEnv
from ..learner import SacAgent


def run_episode(env: GripperEnv, agent: SacAgent, seed, logger=None, mode=SOFT):
    obs = env.reset(seed=seed, mode=mode, noise=False)
    if logger is not None:
        logger.start_episode(env.episode_header())
    done = False
    t = 0
    ep_return = 0.0
    while not done:
        action, _ = agent.act(obs, stochastic=False)
        obs, reward, done, info = env.step(action)
        ep_return += reward
        if logger is not None:
            # intermediate records carry the instantaneous predicate; the final
            # record carries the episode outcome (what evaluation counts)
            flag = info["episode_success"] if done else info["success"]
            logger.log_step(t, info["applied_action"], reward, info["reward_terms"],
                            info["stress"], flag, done)
        t += 1
    peak = env.tracker.snapshot()
    return {
        "seed": seed,
        "steps": t,
        "return": ep_return,
        "success": env.episode_success,
        "failure": env.episode_failed,
        "peak_mean": peak.mean,
        "peak_top5_mean": peak.top_k_mean,
        "peak_max": peak.max,
    }


def _mean_std(values):
    if not values:
        return None
    arr = np.asarray(values, dtype=np.float64)
    return {"mean": float(arr.mean()), "std": float(arr.std(ddof=0))}


def evaluate(env_config: EnvConfig, agent: SacAgent, seeds, episodes_per_seed,
             out_dir=None, mode=SOFT):
    """Evaluate a loaded policy; returns the EvalReport dict."""
    env = GripperEnv(env_config)
    per_seed = []
    all_rows = []
    for seed in seeds:
        logger = None
        if out_dir is not None:
            os.makedirs(out_dir, exist_ok=True)
            logger = EpisodeLogger(os.path.join(out_dir, f"episodes_seed{seed}.jsonl"))
        rows = []
        for i in range(episodes_per_seed):
            rows.append(run_episode(env, agent, seed * 10_000 + i, logger, mode=mode))
        if logger is not None:
            logger.close()
        successes = [r for r in rows if r["success"]]
        per_seed.append({
            "seed": seed,
            "success_rate": len(successes) / len(rows),
            "n_episodes": len(rows),
            "n_excluded_failures": len(rows) - len(successes),
            "stress": {
                "peak_mean": _mean_std([r["peak_mean"] for r in successes]),
                "peak_top5_mean": _mean_std([r["peak_top5_mean"] for r in successes]),
                "peak_max": _mean_std([r["peak_max"] for r in successes]),
            } if successes else None,
        })
        all_rows.extend(rows)

    rates = [s["success_rate"] for s in per_seed]
    seeded_stress = {}
    for key in ("peak_mean", "peak_top5_mean", "peak_max"):
        means = [s["stress"][key]["mean"] for s in per_seed if s["stress"] is not None]
        seeded_stress[key] = _mean_std(means)
    report = {
        "n_seeds": len(seeds),
        "episodes_per_seed": episodes_per_seed,
        "success_rate": {**_mean_std(rates), "per_seed": rates},
        "stress": seeded_stress,  # over successful episodes only, per seed
        "per_seed": per_seed,
        "mode": mode,
    }
    if out_dir is not None:
        with open(os.path.join(out_dir, "report.json"), "w") as f:
            json.dump(report, f, indent=2, sort_keys=True)
    return report


def recompute_from_logs(path):
    """Independent re-aggregation of one episode-log file (report cross-check)."""
    episodes = []
    current = None
    with open(path) as f:
        for line in f:
            record = json.loads(line)
            if "header" in record:
                current = {"rewards": [], "stress_max": [], "success": False}
                episodes.append(current)
            else:
                current["rewards"].append(record["reward"])
                current["stress_max"].append(record["stress"]["max"])
                if record["done"]:
                    current["success"] = record["success"]
    return {
        "n_episodes": len(episodes),
        "success_rate": float(np.mean([e["success"] for e in episodes])),
        "episode_peak_max": [max(e["stress_max"]) for e in episodes],
        "episode_returns": [sum(e["rewards"]) for e in episodes],
        "successes": [e["success"] for e in episodes],
    }
