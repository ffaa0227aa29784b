"""Grasp-vs-pinch stress contrast: matched closing, very different maxima.

Two scripted trajectories squeeze the same block by the same displacement.
The firm grasp lands full-width pads flat on opposite faces; the corner pinch
rotates the block 45 degrees so a narrow corner wedge sits between the pads.
Global statistics stay comparable while the pinch's maximum spikes, which is
exactly why the reward blends a top-percentile statistic with the mean.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from ..config import ControlConfig, ObjectConfig, lite_pick
from ..env import SOFT, GripperEnv
from .scripted import SqueezeDriver

# frozen scenario geometry
CLOSING = 0.012           # matched fingertip travel into the material, m
PINCH_OFFSET_Y = 0.021    # EE offset from the block center toward a corner, m
PAD_HALF_EXTENTS = (0.005, 0.022, 0.02)  # wide pads: full-face grasp coverage
MAX_STEPS = 55


def _scenario_env(yaw_deg):
    cfg = lite_pick()
    cfg = dataclasses.replace(
        cfg,
        object=ObjectConfig(nominal_yaw_deg=yaw_deg),
        control=dataclasses.replace(cfg.control, pad_half_extents=PAD_HALF_EXTENTS),
        randomization=dataclasses.replace(
            cfg.randomization, object_jitter_xy=0.0, object_jitter_yaw_deg=0.0,
            ee_jitter=0.0),
    )
    return GripperEnv(cfg)


def _run_squeeze(env, driver):
    t = 0
    while not driver.done and t < MAX_STEPS:
        _, _, done, info = env.step(driver())
        t += 1
        if done:
            if info["failure"]:
                raise RuntimeError("squeeze scenario destabilized the solver")
            break
    return env.tracker.snapshot()


def fig3_scenario(seed=7, max_ratio_threshold=1.5, mean_rel_threshold=0.30):
    """Run both trajectories; returns the report and asserts the contrast.

    The pinch's peak stress must exceed the grasp's by ``max_ratio_threshold``
    while the episode-max mean stresses stay within ``mean_rel_threshold``.
    """
    grasp_env = _scenario_env(yaw_deg=0.0)
    grasp_env.reset(seed=seed, mode=SOFT, noise=False)
    grasp = _run_squeeze(grasp_env, SqueezeDriver(grasp_env, offset_xy=(0.0, 0.0),
                                                  closing=CLOSING))

    pinch_env = _scenario_env(yaw_deg=45.0)
    pinch_env.reset(seed=seed, mode=SOFT, noise=False)
    half = float(pinch_env._object_shape.half_extents[0])
    wedge_width = 2.0 * (half * math.sqrt(2.0) - PINCH_OFFSET_Y)
    pinch = _run_squeeze(pinch_env, SqueezeDriver(
        pinch_env, offset_xy=(0.0, PINCH_OFFSET_Y), closing=CLOSING,
        contact_width=wedge_width))

    def row(s):
        return {"mean": s.mean, "median": s.median, "top5_mean": s.top_k_mean,
                "top10_median": s.top_k_median, "max": s.max}

    max_ratio = pinch.max / grasp.max
    mean_rel_diff = abs(pinch.mean - grasp.mean) / grasp.mean
    report = {
        "seed": seed,
        "closing_displacement": CLOSING,
        "grasp": row(grasp),
        "pinch": row(pinch),
        "max_ratio": max_ratio,
        "mean_rel_diff": mean_rel_diff,
        "pass_max_ratio": bool(max_ratio >= max_ratio_threshold),
        "pass_mean_closeness": bool(mean_rel_diff <= mean_rel_threshold),
    }
    return report
