"""Task shaping and the stress-penalized reward.

Pick reward: 0.3*r_a + 0.7*r_l + 1.0*r_g + 2.0*r_s + R_stress.
Push drops the lift term and measures goal distances in the table plane.
R_stress is quadratic in a blend of the top-10% median and the mean Von Mises
stress, so occasional localized peaks are penalized much harder than the same
load spread over the body.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field


@dataclass(frozen=True)
class StressPenaltyConfig:
    alpha: float = 0.8  # blend weight of the top-10% median vs the mean
    beta: float = 6000.0  # sharpening scale; penalty ramps hard past ~beta Pa
    scale: float = 5e-5

    def validate(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must be in [0, 1], got {self.alpha}")
        if self.beta <= 0 or self.scale <= 0:
            raise ValueError("beta and scale must be positive")


@dataclass(frozen=True)
class RewardConfig:
    approach_scale: float = 0.3
    lift_scale: float = 0.7
    goal_scale: float = 1.0
    success_scale: float = 2.0
    # Height (m) at which the lift shaping saturates. 0.09 matches the success
    # height; set 0.9 for the literal decimeter-free reading.
    lift_saturation: float = 0.09
    success_threshold: float = 0.02
    distance_sharpness: float = 20.0
    stress: StressPenaltyConfig = field(default_factory=StressPenaltyConfig)

    def validate(self):
        for name in ("approach_scale", "lift_scale", "goal_scale", "success_scale"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.lift_saturation <= 0 or self.success_threshold <= 0:
            raise ValueError("lift_saturation and success_threshold must be positive")
        self.stress.validate()


def approach_reward(d, sharpness=20.0):
    """exp(-20 d) for the Euclidean object-to-TCP distance d >= 0."""
    if d < 0:
        raise ValueError(f"distance must be >= 0, got {d}")
    return math.exp(-sharpness * d)


def lift_reward(h, saturation):
    """clip(h / saturation, 0, 1); h is the object height above the table."""
    return min(max(h / saturation, 0.0), 1.0)


def goal_reward(d_goal, sharpness=20.0):
    """exp(-20 d_goal); planar distance for push, Euclidean for pick."""
    if d_goal < 0:
        raise ValueError(f"distance must be >= 0, got {d_goal}")
    return math.exp(-sharpness * d_goal)


def success_reward(d_goal, threshold):
    """Binary: 1.0 iff d_goal <= threshold (closed boundary)."""
    return 1.0 if d_goal <= threshold else 0.0


def stress_penalty(top10_median, mean, cfg: StressPenaltyConfig):
    """scale * -(1/beta) * (alpha*top10_median + (1-alpha)*mean)^2, always <= 0."""
    if top10_median < 0 or mean < 0:
        raise ValueError("stress inputs must be >= 0")
    combined = cfg.alpha * top10_median + (1.0 - cfg.alpha) * mean
    return -cfg.scale * combined * combined / cfg.beta


def total_reward(task_kind, d_approach, h, d_goal, summary, soft_mode, cfg: RewardConfig):
    """Full per-step reward and its term breakdown.

    ``summary`` is the current step's StressSummary (zeros in rigid mode);
    the stress term is omitted outside soft mode. The returned breakdown sums
    to the total exactly.
    """
    terms = {
        "approach": cfg.approach_scale * approach_reward(d_approach, cfg.distance_sharpness),
        "goal": cfg.goal_scale * goal_reward(d_goal, cfg.distance_sharpness),
        "success": cfg.success_scale * success_reward(d_goal, cfg.success_threshold),
    }
    if task_kind == "pick":
        terms["lift"] = cfg.lift_scale * lift_reward(h, cfg.lift_saturation)
    elif task_kind == "push":
        terms["lift"] = 0.0
    else:
        raise ValueError(f"unknown task kind {task_kind!r}")
    if soft_mode:
        terms["stress"] = stress_penalty(summary.top_k_median, summary.mean, cfg.stress)
    else:
        terms["stress"] = 0.0
    return sum(terms.values()), terms
