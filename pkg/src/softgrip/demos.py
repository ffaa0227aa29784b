"""Demonstration recording, storage, and deterministic replay.

A demo file stores the episode seed and the applied action sequence plus the
observations and rewards the environment produced; because the environment is
deterministic under (seed, actions, config), loading regenerates every
transition by replay and cross-checks it against the embedded record, so a
single flipped byte anywhere is detected.
"""

from __future__ import annotations

import datetime
import json
import uuid

import numpy as np

from .env import RIGID, SOFT, GripperEnv, Observation
from .errors import DemoIntegrityError

SCHEMA = "demo/1"


def _obs_to_json(obs: Observation):
    return {
        "points": obs.point_cloud.tolist(),
        "centroid": obs.centroid.tolist(),
        "ee_pose": obs.ee_pose.tolist(),
        "width_cm": obs.gripper_width_cm,
    }


def _obs_from_json(data):
    return Observation(
        point_cloud=np.asarray(data["points"], dtype=np.float64),
        centroid=np.asarray(data["centroid"], dtype=np.float64),
        ee_pose=np.asarray(data["ee_pose"], dtype=np.float64),
        gripper_width_cm=float(data["width_cm"]),
    )


def _obs_equal(a: Observation, b: Observation):
    return (np.array_equal(a.point_cloud, b.point_cloud)
            and np.array_equal(a.centroid, b.centroid)
            and np.array_equal(a.ee_pose, b.ee_pose)
            and a.gripper_width_cm == b.gripper_width_cm)


class DemoTrajectory:
    """One successful teleoperated episode: header + ordered steps."""

    def __init__(self, header, actions, rewards, dones, observations=None):
        self.header = header
        self.actions = [np.asarray(a, dtype=np.float64) for a in actions]
        self.rewards = list(rewards)
        self.dones = list(dones)
        self.observations = observations  # len(actions) + 1 when embedded

    def __len__(self):
        return len(self.actions)

    def to_jsonl(self):
        lines = [json.dumps({"schema": SCHEMA, **self.header}, sort_keys=True)]
        for i in range(len(self.actions)):
            record = {
                "action": self.actions[i].tolist(),
                "reward": self.rewards[i],
                "done": self.dones[i],
            }
            if self.observations is not None:
                record["next_obs"] = _obs_to_json(self.observations[i + 1])
                if i == 0:
                    record["first_obs"] = _obs_to_json(self.observations[0])
            lines.append(json.dumps(record, sort_keys=True))
        return "\n".join(lines) + "\n"

    def save(self, path):
        with open(path, "w") as f:
            f.write(self.to_jsonl())

    @classmethod
    def from_jsonl(cls, text):
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines:
            raise DemoIntegrityError("empty demo file")
        header = json.loads(lines[0])
        if header.get("schema") != SCHEMA:
            raise DemoIntegrityError(
                f"unsupported demo schema {header.get('schema')!r}")
        actions, rewards, dones, observations = [], [], [], None
        for i, line in enumerate(lines[1:]):
            record = json.loads(line)
            actions.append(np.asarray(record["action"], dtype=np.float64))
            rewards.append(float(record["reward"]))
            dones.append(bool(record["done"]))
            if "next_obs" in record:
                if observations is None:
                    if "first_obs" not in record:
                        raise DemoIntegrityError("embedded obs missing first_obs")
                    observations = [_obs_from_json(record["first_obs"])]
                observations.append(_obs_from_json(record["next_obs"]))
        return cls(header, actions, rewards, dones, observations)

    @classmethod
    def load_file(cls, path):
        with open(path) as f:
            return cls.from_jsonl(f.read())


def record_demo(env: GripperEnv, driver, seed, max_steps=None):
    """Run one episode under ``driver`` and package it as a demo.

    Demos are recorded in soft mode with observation noise on, matching the
    training distribution. Episodes that do not end in success are rejected.
    Returns (trajectory, None) on success or (None, reason).
    """
    obs = env.reset(seed=seed, mode=SOFT, noise=True)
    if env.mode != SOFT:
        return None, "demos must be recorded in soft mode"
    observations = [obs]
    actions, rewards, dones = [], [], []
    done = False
    steps = 0
    while not done:
        action = np.clip(np.asarray(driver(obs), dtype=np.float64), -1.0, 1.0)
        obs, reward, done, info = env.step(action)
        observations.append(obs)
        actions.append(action)
        rewards.append(float(reward))
        dones.append(bool(info["terminal"]))
        steps += 1
        if max_steps is not None and steps >= max_steps:
            break
    if not env.episode_success:
        return None, "episode did not end in success; demo discarded"
    header = {
        "demo_id": str(uuid.uuid4()),
        "created_at": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "steps": len(actions),
        "stress_reward": bool(env.stress_reward_enabled),
        **env.episode_header(),
    }
    return DemoTrajectory(header, actions, rewards, dones, observations), None


def replay_demo(env: GripperEnv, demo: DemoTrajectory, verify=True):
    """Regenerate the trajectory from (seed, actions); verify embedded records.

    Returns the regenerated (observations, rewards, dones). Raises
    DemoIntegrityError on config-hash mismatch or any replay divergence.
    """
    if demo.header["config_hash"] != env.config_hash:
        raise DemoIntegrityError(
            f"demo config hash {demo.header['config_hash']} does not match the "
            f"environment ({env.config_hash}); refusing silent distribution shift")
    if demo.header["mode"] != SOFT:
        raise DemoIntegrityError("stored demo is not a soft-mode episode")
    obs = env.reset(seed=demo.header["seed"], mode=SOFT, noise=True)
    observations = [obs]
    rewards, dones = [], []
    for i, action in enumerate(demo.actions):
        obs, reward, done, info = env.step(action)
        observations.append(obs)
        rewards.append(float(reward))
        dones.append(bool(info["terminal"]))
        if done and i != len(demo.actions) - 1:
            raise DemoIntegrityError(f"replay terminated early at step {i}")
    if verify:
        if not env.episode_success:
            raise DemoIntegrityError("replay did not reproduce a successful episode")
        # rewards are only comparable when the stress-penalty toggle matches
        # the recording; a run with SPR off legitimately regenerates the
        # task-only rewards its learner must see
        if demo.header.get("stress_reward", True) == env.stress_reward_enabled:
            for i, (got, want) in enumerate(zip(rewards, demo.rewards)):
                if got != want:
                    raise DemoIntegrityError(
                        f"reward diverged at step {i}: {got} != {want}")
        if demo.observations is not None:
            for i, (got, want) in enumerate(zip(observations, demo.observations)):
                if not _obs_equal(got, want):
                    raise DemoIntegrityError(f"observation diverged at step {i}")
    return observations, rewards, dones


def load_demos_into_buffer(paths, env: GripperEnv, buffer):
    """Replay each demo file and append its transitions to ``buffer``."""
    total = 0
    for path in paths:
        demo = DemoTrajectory.load_file(path)
        observations, rewards, dones = replay_demo(env, demo)
        for i in range(len(demo)):
            buffer.add(observations[i], demo.actions[i].astype(np.float32),
                       rewards[i], observations[i + 1], dones[i])
            total += 1
    return total
