"""Aggregate per-method evaluation across the seeds of the ablation grid.

Each training run directory holds its own config and final checkpoint; this
module evaluates every run of a method with a fixed episode budget and folds
the per-run results into the table row format: success rate mean+-std over
seeds, and episode-max stress statistics (successful episodes only) mean+-std
over seeds.
"""

from __future__ import annotations

import json
import os

import numpy as np

from ..config import load_train_config
from ..learner import SacAgent
from .evaluate import evaluate


def evaluate_run(run_dir, episodes, eval_seed, out_dir=None):
    """Evaluate one training run's final checkpoint."""
    config = load_train_config(os.path.join(run_dir, "config.json"))
    agent = SacAgent(config.learner, config.env.control.workspace_lo,
                     config.env.control.workspace_hi, seed=0)
    agent.load(os.path.join(run_dir, "ckpt.pt"))
    return evaluate(config.env, agent, seeds=[eval_seed], episodes_per_seed=episodes,
                    out_dir=out_dir)


def _mean_std(values):
    arr = np.asarray(values, dtype=np.float64)
    return {"mean": float(arr.mean()), "std": float(arr.std(ddof=0))}


def evaluate_method(run_dirs, episodes=40, out_dir=None):
    """One ablation-table row from several training seeds of the same method."""
    rows = []
    for i, run_dir in enumerate(sorted(run_dirs)):
        with open(os.path.join(run_dir, "run.json")) as f:
            manifest = json.load(f)
        sub_dir = (os.path.join(out_dir, f"run{i}_seed{manifest['seed']}")
                   if out_dir else None)
        report = evaluate_run(run_dir, episodes, eval_seed=manifest["seed"] + 5000,
                              out_dir=sub_dir)
        rows.append({"run_dir": run_dir, "train_seed": manifest["seed"],
                     "method": manifest["method"], "report": report})

    rates = [r["report"]["success_rate"]["mean"] for r in rows]
    stress = {}
    for key in ("peak_mean", "peak_top5_mean", "peak_max"):
        vals = [r["report"]["stress"][key]["mean"] for r in rows
                if r["report"]["stress"][key] is not None]
        stress[key] = _mean_std(vals) if vals else None
    method_report = {
        "method": rows[0]["method"] if rows else None,
        "n_runs": len(rows),
        "episodes_per_run": episodes,
        "success_rate": {**_mean_std(rates), "per_run": rates},
        "stress": stress,
        "runs": rows,
    }
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, "method_report.json"), "w") as f:
            json.dump(method_report, f, indent=2, sort_keys=True)
    return method_report
